#pragma once

#include <stdexcept>
#include <string>

namespace renewal {

/// Argument outside the mathematical domain of an operation (negative time,
/// probability outside [0, 1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An integral (moment, MGF, outer stationary integral, series) does not
/// converge. `threshold` carries the divergence point when one is known
/// (e.g. the MGF abscissa), otherwise NaN.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double threshold)
      : std::runtime_error(what), threshold_(threshold) {}
  double threshold() const noexcept { return threshold_; }

 private:
  double threshold_;
};

/// Conditioning on an event of (numerically) zero probability, e.g. a forward
/// law from an elapsed time where F(theta) == 1.
class NullConditioningError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Lorden threshold Theta does not exceed R = E xi^2 / E xi.
class ThresholdTooSmallError : public std::invalid_argument {
 public:
  ThresholdTooSmallError(const std::string& what, double ratio)
      : std::invalid_argument(what), ratio_(ratio) {}
  double lorden_ratio() const noexcept { return ratio_; }

 private:
  double ratio_;
};

/// kappa_Theta is not positive: no coupling attempt can succeed.
class NoCouplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// beta_search found no admissible rate above the search floor.
class NoExponentialRateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// q * M(beta, Theta) >= 1 for the requested rate.
class RateInadmissibleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent run configuration; `field` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace renewal
