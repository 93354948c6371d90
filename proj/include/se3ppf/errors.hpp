#pragma once

#include <stdexcept>
#include <string>

namespace se3ppf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A measured or inertial vector has (numerically) zero length.
class DegenerateVector : public Error {
 public:
  using Error::Error;
};

/// The first two reference directions are (nearly) collinear.
class NonCollinearityFailure : public Error {
 public:
  using Error::Error;
};

/// Attitude is unobservable from the supplied observations.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

class NoLandmarks : public Error {
 public:
  using Error::Error;
};

/// The measurement-side inverse used by the direct filter is ill conditioned.
class SingularAggregate : public Error {
 public:
  using Error::Error;
};

/// The attitude error reached the excluded set where the correction
/// denominator vanishes (1 - ||R~||_I or 1 + Upsilon below the guard).
class NearSingularAttitude : public Error {
 public:
  using Error::Error;
};

/// A constrained error left the open interval (-delta_under, delta_bar) * xi.
class EnvelopeViolation : public Error {
 public:
  EnvelopeViolation(int channel, double time, double ratio)
      : Error("envelope violation on channel " + std::to_string(channel + 1) +
              " at t=" + std::to_string(time) +
              " (e/xi=" + std::to_string(ratio) + ")"),
        channel_(channel),
        time_(time),
        ratio_(ratio) {}

  /// Zero-based channel index (0 = attitude, 1..3 = position).
  int channel() const noexcept { return channel_; }
  double time() const noexcept { return time_; }
  double ratio() const noexcept { return ratio_; }

 private:
  int channel_;
  double time_;
  double ratio_;
};

}  // namespace se3ppf
