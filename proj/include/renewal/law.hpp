#pragma once

// Renewal-period laws on [0, inf) and the laws derived from them.
//
// Every law is described through its log-survival function and density;
// CDF, survival and hazard follow. Laws are immutable after construction and
// safe to share between threads.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "renewal/quadrature.hpp"
#include "renewal/rng.hpp"

namespace renewal {

/// Mass left beyond the truncation point of [0, inf) integrals.
inline constexpr double kTailMass = 1e-14;

class RenewalLaw {
 public:
  virtual ~RenewalLaw() = default;

  /// log P{xi > s}; may be -inf beyond a bounded support.
  virtual double log_survival(double s) const = 0;
  virtual double pdf(double s) const = 0;
  /// f / (1 - F); +inf where the survival function vanishes.
  virtual double hazard(double s) const;
  /// sup { beta : E exp(beta xi) < inf }.
  virtual double mgf_abscissa() const = 0;
  /// Law description `{family, params}` as accepted by make_law.
  virtual nlohmann::json spec() const = 0;
  /// Closed-form inverse CDF where a family has one; the default bisects.
  virtual double quantile(double u) const;

  double survival(double s) const;
  double cdf(double s) const;

  /// Point beyond which the survival function is below kTailMass.
  double tail_point() const { return tail_; }

 protected:
  /// Derived constructors call this once the law is fully set up.
  void init_tail();
  double bisect_quantile(double u) const;

 private:
  double tail_ = 0.0;
};

using LawPtr = std::shared_ptr<const RenewalLaw>;

/// Exponential law with the given rate.
class ExponentialLaw final : public RenewalLaw {
 public:
  explicit ExponentialLaw(double rate);
  double log_survival(double s) const override;
  double pdf(double s) const override;
  double hazard(double s) const override;
  double mgf_abscissa() const override { return rate_; }
  nlohmann::json spec() const override;
  double quantile(double u) const override;
  double rate() const noexcept { return rate_; }

 private:
  double rate_;
};

/// Law with hazard lambda(s) = C + K / (1 + s), i.e. survival
/// e^{-Cs} (1+s)^{-K}: the minimum of a rate-C exponential and a Pareto
/// variable with survival (1+s)^{-K}.
class ExampleLaw final : public RenewalLaw {
 public:
  ExampleLaw(double c, double k);
  double log_survival(double s) const override;
  double pdf(double s) const override;
  double hazard(double s) const override;
  double mgf_abscissa() const override { return c_; }
  nlohmann::json spec() const override;
  double c() const noexcept { return c_; }
  double k() const noexcept { return k_; }

 private:
  double c_;
  double k_;
};

/// Law given by an arbitrary hazard function. The cumulative hazard is
/// integrated once onto cached knots (Gauss-Legendre per cell, cells aligned
/// with the supplied breakpoints) and completed inside a cell on demand.
class HazardLaw : public RenewalLaw {
 public:
  /// `tail_rate` is lim inf of the hazard, which is also the MGF abscissa.
  HazardLaw(std::function<double(double)> hazard, double tail_rate,
            std::vector<double> breakpoints = {}, nlohmann::json spec = nullptr);

  double log_survival(double s) const override;
  double pdf(double s) const override;
  double hazard(double s) const override { return hazard_(s); }
  double mgf_abscissa() const override { return tail_rate_; }
  nlohmann::json spec() const override { return spec_; }

  double cumulative_hazard(double s) const;

 private:
  std::function<double(double)> hazard_;
  double tail_rate_;
  nlohmann::json spec_;
  std::vector<double> knots_;
  std::vector<double> cumulative_;
};

/// Piecewise-linear hazard through the knots (s_i, lambda_i), constant
/// beyond the last knot (and before the first one, if it is not at 0).
LawPtr make_hazard_table(std::vector<std::pair<double, double>> knots);

/// Conditional law of the residual time to the next renewal given that
/// `elapsed` time has passed since the last one:
/// P{W > s} = (1 - F(s + theta)) / (1 - F(theta)).
class ForwardLaw final : public RenewalLaw {
 public:
  ForwardLaw(LawPtr base, double elapsed);
  double log_survival(double s) const override;
  double pdf(double s) const override;
  double hazard(double s) const override;
  double mgf_abscissa() const override { return base_->mgf_abscissa(); }
  nlohmann::json spec() const override;

  const RenewalLaw& base() const noexcept { return *base_; }
  double elapsed() const noexcept { return elapsed_; }

 private:
  LawPtr base_;
  double elapsed_;
  double log_norm_;  // log survival of the base at `elapsed`
};

/// Stationary law of the backward renewal time: density (1 - F(u)) / E xi.
class StationaryBackwardLaw final : public RenewalLaw {
 public:
  explicit StationaryBackwardLaw(LawPtr base, const quad::Options& opt = {});
  double log_survival(double s) const override;
  double pdf(double s) const override;
  double mgf_abscissa() const override { return base_->mgf_abscissa(); }
  nlohmann::json spec() const override;

  const RenewalLaw& base() const noexcept { return *base_; }
  double base_mean() const noexcept { return mean_xi_; }
  /// Mean of the stationary backward time, by quadrature.
  double mean() const noexcept { return mean_; }

 private:
  double tail_integral(double s) const;  // int_s^inf (1 - F)

  LawPtr base_;
  double mean_xi_;
  double mean_;
  std::vector<double> knots_;
  std::vector<double> suffix_;  // int_{knots_[i]}^inf (1 - F)
};

// ---- operations -----------------------------------------------------------

struct Evaluation {
  double cdf;
  double pdf;
  double hazard;
};

Evaluation evaluate(const RenewalLaw& law, double s);

/// E xi^order = int order s^{order-1} (1 - F(s)) ds.
quad::Result moment_integral(const RenewalLaw& law, double order, const quad::Options& opt = {});
double moment(const RenewalLaw& law, double order, const quad::Options& opt = {});

/// E exp(beta xi) = 1 + beta int e^{beta s} (1 - F(s)) ds.
double mgf(const RenewalLaw& law, double beta, const quad::Options& opt = {});

double quantile(const RenewalLaw& law, double u);

/// One inverse-CDF draw; consumes exactly one uniform.
double sample(const RenewalLaw& law, UniformStream& rng);

std::shared_ptr<const ForwardLaw> forward_law(LawPtr law, double elapsed);
std::shared_ptr<const StationaryBackwardLaw> stationary_backward(LawPtr law,
                                                                 const quad::Options& opt = {});

/// Builds a law from `{family: "exponential"|"example"|"hazard-table", params: {...}}`.
/// Throws ConfigError naming the offending field.
LawPtr make_law(const nlohmann::json& spec);

}  // namespace renewal
