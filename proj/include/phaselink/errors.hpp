#pragma once

#include <stdexcept>
#include <string>

namespace phaselink {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ZeroEnergyAcquisition : public Error {
 public:
  explicit ZeroEnergyAcquisition(int index)
      : Error("acquisition " + std::to_string(index) + " has zero total energy"),
        index(index) {}
  int index;
};

class TooFewAcquisitions : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class InvalidBeta : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class SingularMagnitudeMatrix : public Error {
 public:
  using Error::Error;
};

class EigensolverFailure : public Error {
 public:
  using Error::Error;
};

class NonFiniteObjective : public Error {
 public:
  using Error::Error;
};

/// The penalty loop ran out of budget before the secondary solution became
/// orthogonal; carries the inner-product magnitude that was achieved.
class OrthogonalityNotReached : public Error {
 public:
  explicit OrthogonalityNotReached(double achieved)
      : Error("orthogonality tolerance not reached; |<v2,v1>| = " +
              std::to_string(achieved)),
        achieved(achieved) {}
  double achieved;
};

class DegenerateBounds : public Error {
 public:
  using Error::Error;
};

class InvalidNoiseFloor : public Error {
 public:
  using Error::Error;
};

class SingularSigma : public Error {
 public:
  using Error::Error;
};

class MissingSecondary : public Error {
 public:
  using Error::Error;
};

class UndefinedAmbiguity : public Error {
 public:
  using Error::Error;
};

class UnknownMethodScheme : public Error {
 public:
  using Error::Error;
};

class FitDiverged : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class NotPSD : public Error {
 public:
  using Error::Error;
};

class CholeskyFailure : public Error {
 public:
  using Error::Error;
};

class RegionGapOrOverlap : public Error {
 public:
  using Error::Error;
};

class EmptySample : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace phaselink
