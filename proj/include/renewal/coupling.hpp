#pragma once

// Basic coupling construction for two absolutely continuous laws.
//
// Given densities f1, f2 and a common minorant phi <= min(f1, f2) of mass
// kappa, the laws split as F_i = Phi + Psi_i with Phi(inf) = kappa and
// Psi_i(inf) = 1 - kappa. Three uniforms (u, u', u'') then produce
//
//   theta_i = Phi^{-1}(kappa u')                 if u <  kappa
//           = Psi_i^{-1}((1 - kappa) u'')       if u >= kappa
//
// so theta_i ~ F_i and P{theta_1 == theta_2} = kappa. With phi = min(f1, f2)
// kappa is the largest possible coincidence probability.

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "renewal/law.hpp"

namespace renewal {

enum class Side { first = 0, second = 1 };

/// Sub-probability density with a tabulated CDF, used as a common minorant.
class Minorant {
 public:
  explicit Minorant(std::function<double(double)> density, const quad::Options& opt = {});

  double pdf(double s) const { return density_(s); }
  double cdf(double s) const;
  double mass() const noexcept { return cumulative_.back() + tail_mass_; }

 private:
  std::function<double(double)> density_;
  std::vector<double> knots_;
  std::vector<double> cumulative_;
  double tail_mass_ = 0.0;
};

/// phi(s) = C e^{-Cs} / (1 + s + Theta)^{K+1}: a minorant of f and of every
/// forward density f_theta^W, theta in [0, Theta], for the example family.
std::shared_ptr<const Minorant> example_minorant(double c, double k, double threshold);

class OverlapSplit {
 public:
  /// Exact split with the common part min(f1, f2).
  OverlapSplit(LawPtr first, LawPtr second);
  /// Split with a supplied minorant phi <= min(f1, f2).
  OverlapSplit(LawPtr first, LawPtr second, std::shared_ptr<const Minorant> minorant);

  double kappa() const noexcept { return kappa_; }
  bool residual_empty() const noexcept { return kappa_ == 1.0; }
  bool common_empty() const noexcept { return kappa_ == 0.0; }
  bool uses_minorant() const noexcept { return minorant_ != nullptr; }

  double common_pdf(double s) const;
  double residual_pdf(Side side, double s) const;
  double common_cdf(double s) const;               // Phi
  double residual_cdf(Side side, double s) const;  // Psi_i

  /// Phi^{-1}(y) for y in [0, kappa).
  double common_quantile(double y) const;
  /// Psi_i^{-1}(y) for y in [0, 1 - kappa).
  double residual_quantile(Side side, double y) const;

  const RenewalLaw& law(Side side) const { return *laws_[index(side)]; }
  /// Sign changes of f1 - f2 located by the scan (exact split only).
  const std::vector<double>& crossovers() const noexcept { return crossovers_; }

  /// Pieces of [0, inf) on which one density is the pointwise minimum;
  /// piece k is [starts()[k], starts()[k+1]) and the last one is unbounded.
  const std::vector<double>& starts() const noexcept { return starts_; }
  Side lower(std::size_t piece) const { return lower_[piece]; }

 private:
  static std::size_t index(Side s) { return static_cast<std::size_t>(s); }
  void build_exact();
  std::size_t piece_of(double s) const;
  double invert(const std::function<double(double)>& cdf, double y, double lo, double hi) const;

  std::array<LawPtr, 2> laws_;
  std::shared_ptr<const Minorant> minorant_;
  double kappa_ = 0.0;
  double horizon_ = 0.0;
  std::vector<double> crossovers_;
  std::vector<double> starts_;
  std::vector<Side> lower_;
  std::vector<double> common_at_start_;
  std::array<std::vector<double>, 2> residual_at_start_;
};

/// kappa = int min(f1, f2).
double overlap(LawPtr first, LawPtr second);

OverlapSplit split(LawPtr first, LawPtr second);
OverlapSplit split(LawPtr first, LawPtr second, std::shared_ptr<const Minorant> minorant);

struct CoupledPair {
  double first;
  double second;
  bool coincided;
};

/// The three-uniform construction; u, u', u'' must lie in [0, 1).
CoupledPair coupled_sample(const OverlapSplit& split, double u, double u_common, double u_residual);

}  // namespace renewal
