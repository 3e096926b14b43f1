#pragma once

// Certified bounds on the coupling epoch tau(b, b') of two backward renewal
// processes and the resulting total-variation convergence curves.
//
// Coupling is attempted at renewal times of the lead process. An attempt is
// eligible when the other process has age <= Theta (probability >= p0 by
// Lorden's inequality) and then succeeds with probability >= kappa_Theta, so
// each attempt succeeds with probability >= pi = p0 kappa_Theta and the
// number of failed attempts is dominated by a geometric law with ratio
// q = 1 - pi.

#include <optional>
#include <utility>
#include <vector>

#include "renewal/coupling.hpp"
#include "renewal/law.hpp"

namespace renewal {

struct LordenBound {
  double ratio;  // R = E xi^2 / E xi
  double p0;     // 1 - R / Theta
};

LordenBound lorden_p0(const RenewalLaw& law, double threshold, const quad::Options& opt = {});

struct KappaThetaOptions {
  int grid_size = 256;
  int refinement_rounds = 2;
  int refinement_points = 16;
};

struct KappaTheta {
  double value;     // certified lower bound: grid minimum less the Lipschitz margin
  double grid_min;  // smallest overlap actually evaluated
  double argmin;
  double margin;
  int evaluations;
};

/// inf over theta in [0, Theta] of overlap(f, f_theta^W).
KappaTheta kappa_theta(LawPtr law, double threshold, const KappaThetaOptions& opt = {});

struct CouplingParams {
  double threshold;     // Theta
  double lorden_ratio;  // R
  double p0;
  double kappa_theta;
  double pi;
  double q;
};

CouplingParams coupling_params(LawPtr law, double threshold, const KappaThetaOptions& kopt = {},
                               const quad::Options& opt = {});

/// Theta maximising pi = p0(Theta) kappa_Theta over (R, 32 R].
double optimize_threshold(LawPtr law, const KappaThetaOptions& kopt = {}, const quad::Options& opt = {});

/// S_ell = sum_{i>=0} (i+1)^{ell-1} q^i, summed until the geometric remainder
/// bound drops below `tol` (relative).
double s_ell(double q, double ell, double tol = 1e-13);

/// Closed form for integer ell >= 1: A_{ell-1}(q) / (1-q)^ell with the
/// Eulerian polynomial A_n, i.e. (x d/dx)^{ell-1} applied to 1/(1-x).
double s_ell_closed_form(double q, int ell);

/// E (t1 + t1')^ell for independent forward times from ages b and b'.
double forward_sum_moment(LawPtr law, double b, double b_prime, double ell,
                          const quad::Options& opt = {});

struct PolyBound {
  double ell;
  double s_ell;
  double forward_moment;  // E (t1 + t1')^ell
  double xi_moment;       // E xi^ell
  double value;
};

/// Poly(tau(b, b'), ell) = E(t1 + t1')^ell S_ell + E xi^ell (1/(1-q)^2 + 1/(1-q)).
PolyBound poly_bound(LawPtr law, double b, double b_prime, const CouplingParams& params, double ell,
                     const quad::Options& opt = {});

/// Bound M(beta, Theta) on the MGF of the time increment that follows a
/// failed attempt. A failure either has the other process older than Theta
/// (the increment is a fresh period) or draws from the residual part of the
/// split of f against f_theta^W; M is the larger of the two, with the
/// residual part maximised over a theta grid on [0, Theta].
///
/// The splits depend only on theta, so they are built once and reused for
/// every rate.
class ResidualMgf {
 public:
  ResidualMgf(LawPtr law, double threshold, int grid_size = 128, const quad::Options& opt = {});

  struct Value {
    double fresh;     // E exp(beta xi)
    double residual;  // sup_theta of the normalised residual MGF
    double value;     // max(fresh, residual)
    double worst_theta;
  };

  /// Throws DivergenceError at or beyond the MGF abscissa.
  Value operator()(double beta) const;

  const RenewalLaw& law() const { return *law_; }
  double threshold() const noexcept { return threshold_; }

 private:
  struct Cell {
    double theta;
    double kappa;
    std::vector<double> starts;
    std::vector<Side> lower;
    LawPtr forward;
  };

  double residual_mgf(const Cell& cell, Side side, double beta) const;

  LawPtr law_;
  double threshold_;
  quad::Options opt_;
  std::vector<Cell> cells_;
};

struct ExampleDiagnostics {
  double gamma1;  // min(1/C, 1/(K-1)), a bound on E xi
  std::optional<double> gamma2;
  std::optional<double> r_hat;
  std::optional<double> q_theta;  // Q(Theta)
};

/// Q(Theta) = (int_0^inf ((C+K+C(s+Theta))(1+Theta)^K - C)^2 / (1+s)^{2(K+1)} ds)^{1/2}.
double example_q(double c, double k, double threshold, const quad::Options& opt = {});
/// sqrt(1 / (2 (C - beta))) Q(Theta).
double example_analytic_m(double c, double k, double threshold, double beta,
                          const quad::Options& opt = {});
ExampleDiagnostics example_diagnostics(double c, double k, double threshold,
                                       const quad::Options& opt = {});

struct MgfBound {
  double beta;
  double fresh;
  double residual;
  double value;
  std::optional<double> analytic;  // example family only
};

MgfBound residual_mgf_bound(const ResidualMgf& table, double beta);
MgfBound residual_mgf_bound(LawPtr law, double threshold, double beta);

struct BetaSearch {
  double beta0;
  double beta_max;
  double epsilon;
  double margin;  // 1 - q M(beta0 (1 - epsilon))
};

/// Largest beta in (0, beta_max) with q M(beta, Theta) < 1, by bisection.
BetaSearch beta_search(const ResidualMgf& table, double q, std::optional<double> beta_max = {},
                       double rel_tol = 1e-9);

struct ExpBound {
  double beta;
  double forward_mgf_first;   // E exp(beta t1)
  double forward_mgf_second;  // E exp(beta t1')
  double xi_mgf;
  double m;
  double value;
};

/// Exp(tau(b, b'), beta) = E e^{beta t1} E e^{beta t1'} E e^{beta xi} / (1 - q M(beta, Theta)).
ExpBound exp_bound(LawPtr law, double b, double b_prime, const CouplingParams& params,
                   const ResidualMgf& table, double beta, const quad::Options& opt = {});

enum class TvMode { poly, exp };

struct TvCurve {
  TvMode mode;
  double order;     // ell for poly, beta for exp
  double integral;  // int Poly/Exp(tau(b, b')) dP_B(b')
  std::vector<std::pair<double, double>> points;
};

/// Bound on ||P(B_t) - P_B||_TV over t_grid: t^{-ell} or e^{-beta t} times the
/// stationary average of the coupling-epoch bound, capped at 1. `table` is
/// required in exp mode.
TvCurve tv_bound_curve(LawPtr law, double b, const CouplingParams& params, TvMode mode, double order,
                       const std::vector<double>& t_grid, const ResidualMgf* table = nullptr,
                       const quad::Options& opt = {});

}  // namespace renewal
