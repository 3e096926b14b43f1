#include "renewal/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "renewal/errors.hpp"

namespace renewal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Stationary weight below e^-600 contributes nothing to the outer integral.
constexpr double kNegligibleLogWeight = -600.0;

bool is_integer(double x) { return std::floor(x) == x; }

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double forward_moment(const LawPtr& law, double age, int order, const quad::Options& opt) {
  if (order == 0) return 1.0;
  return moment(*forward_law(law, age), order, opt);
}

double forward_mgf(const LawPtr& law, double age, double beta, const quad::Options& opt) {
  return mgf(*forward_law(law, age), beta, opt);
}

}  // namespace

// ---- Lorden / kappa_Theta ---------------------------------------------------

LordenBound lorden_p0(const RenewalLaw& law, double threshold, const quad::Options& opt) {
  const double m1 = moment(law, 1.0, opt);
  const double m2 = moment(law, 2.0, opt);
  const double ratio = m2 / m1;
  if (!(threshold > ratio * (1.0 + 1e-9))) {
    throw ThresholdTooSmallError("threshold Theta = " + std::to_string(threshold) +
                                     " must exceed the Lorden ratio R = E xi^2 / E xi = " +
                                     std::to_string(ratio),
                                 ratio);
  }
  return {ratio, 1.0 - ratio / threshold};
}

KappaTheta kappa_theta(LawPtr law, double threshold, const KappaThetaOptions& opt) {
  if (!(threshold > 0.0)) throw DomainError("kappa_Theta needs Theta > 0");
  if (opt.grid_size < 1) throw DomainError("kappa_Theta needs a nonempty grid");

  std::vector<std::pair<double, double>> points;  // (theta, overlap)
  const auto eval = [&](double theta) {
    points.emplace_back(theta, overlap(law, forward_law(law, theta)));
  };
  if (opt.grid_size == 1) {
    eval(0.0);
  } else {
    for (int j = 0; j < opt.grid_size; ++j) eval(threshold * j / (opt.grid_size - 1));
  }

  double spacing = opt.grid_size > 1 ? threshold / (opt.grid_size - 1) : 0.0;
  for (int round = 0; round < opt.refinement_rounds && spacing > 0.0; ++round) {
    const auto best = std::min_element(points.begin(), points.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    const double lo = std::max(0.0, best->first - spacing);
    const double hi = std::min(threshold, best->first + spacing);
    const int m = opt.refinement_points;
    for (int j = 1; j < m; ++j) eval(lo + (hi - lo) * j / m);
    spacing = (hi - lo) / m;
  }

  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end(),
                           [](const auto& a, const auto& b) { return a.first == b.first; }),
               points.end());

  // Largest observed slope; every theta in [0, Theta] lies within `radius` of an evaluated point.
  double slope = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double dt = points[i + 1].first - points[i].first;
    slope = std::max(slope, std::abs(points[i + 1].second - points[i].second) / dt);
  }
  KappaTheta out{kInf, kInf, 0.0, 0.0, static_cast<int>(points.size())};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double left = i > 0 ? points[i].first - points[i - 1].first : 0.0;
    const double right = i + 1 < points.size() ? points[i + 1].first - points[i].first : 0.0;
    const double radius = 0.5 * std::max(left, right);
    const double lower = points[i].second - slope * radius;
    if (points[i].second < out.grid_min) {
      out.grid_min = points[i].second;
      out.argmin = points[i].first;
    }
    if (lower < out.value) {
      out.value = lower;
      out.margin = slope * radius;
    }
  }
  out.value = std::min(out.value, 1.0);
  if (!(out.value > 0.0)) {
    throw NoCouplingError("kappa_Theta is not positive (grid minimum " + std::to_string(out.grid_min) +
                          " at theta = " + std::to_string(out.argmin) + ")");
  }
  return out;
}

CouplingParams coupling_params(LawPtr law, double threshold, const KappaThetaOptions& kopt,
                               const quad::Options& opt) {
  const LordenBound lb = lorden_p0(*law, threshold, opt);
  const double kappa = kappa_theta(law, threshold, kopt).value;
  const double pi = lb.p0 * kappa;
  return {threshold, lb.ratio, lb.p0, kappa, pi, 1.0 - pi};
}

double optimize_threshold(LawPtr law, const KappaThetaOptions& kopt, const quad::Options& opt) {
  const double ratio = moment(*law, 2.0, opt) / moment(*law, 1.0, opt);
  const auto pi_at = [&](double log_theta) {
    const double theta = std::exp(log_theta);
    return (1.0 - ratio / theta) * kappa_theta(law, theta, kopt).value;
  };
  const double lo = std::log(ratio * 1.01);
  const double hi = std::log(ratio * 32.0);
  constexpr int kScan = 24;
  int best = 0;
  double best_pi = -1.0;
  for (int j = 0; j <= kScan; ++j) {
    const double v = pi_at(lo + (hi - lo) * j / kScan);
    if (v > best_pi) {
      best_pi = v;
      best = j;
    }
  }
  // Golden-section refinement on the bracketing scan cells.
  double a = lo + (hi - lo) * std::max(0, best - 1) / kScan;
  double b = lo + (hi - lo) * std::min(kScan, best + 1) / kScan;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = pi_at(x1);
  double f2 = pi_at(x2);
  for (int it = 0; it < 20; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = pi_at(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = pi_at(x1);
    }
  }
  return std::exp(f1 > f2 ? x1 : x2);
}

// ---- S_ell ------------------------------------------------------------------

double s_ell_closed_form(double q, int ell) {
  if (!(q >= 0.0 && q < 1.0)) throw DivergenceError("S_ell diverges for q >= 1", 1.0);
  if (ell < 1) throw DomainError("closed form S_ell needs integer ell >= 1");
  // Eulerian numbers A(n, m), n = ell - 1.
  const int n = ell - 1;
  std::vector<double> row{1.0};
  for (int r = 1; r <= n; ++r) {
    std::vector<double> next(static_cast<std::size_t>(r), 0.0);
    for (int m = 0; m < r; ++m) {
      const double keep = m < static_cast<int>(row.size()) ? (m + 1) * row[m] : 0.0;
      const double shift = m >= 1 ? (r - m) * row[m - 1] : 0.0;
      next[m] = keep + shift;
    }
    row = std::move(next);
  }
  double poly = 0.0;
  for (std::size_t m = row.size(); m-- > 0;) poly = poly * q + row[m];
  return poly / std::pow(1.0 - q, ell);
}

double s_ell(double q, double ell, double tol) {
  if (!(q < 1.0)) throw DivergenceError("S_ell diverges for q >= 1 (q = " + std::to_string(q) + ")", 1.0);
  if (!(q >= 0.0)) throw DomainError("S_ell needs q in [0, 1)");
  if (!(ell >= 1.0)) throw DomainError("S_ell needs ell >= 1");
  if (q == 0.0) return 1.0;

  const double log_q = std::log(q);
  const auto log_term = [&](double i) { return (ell - 1.0) * std::log(i + 1.0) + i * log_q; };
  double sum = 0.0;
  for (long i = 0;; ++i) {
    sum += std::exp(log_term(static_cast<double>(i)));
    const double j = static_cast<double>(i + 1);
    const double ratio = std::pow((j + 2.0) / (j + 1.0), ell - 1.0) * q;
    if (ratio < 1.0) {
      const double remainder = std::exp(log_term(j)) / (1.0 - ratio);
      if (remainder <= tol * sum) break;
    }
    if (i > 100000000L) throw DivergenceError("S_ell summation did not settle", 1.0);
  }

  if (is_integer(ell) && ell <= 30.0) {
    const double closed = s_ell_closed_form(q, static_cast<int>(ell));
    if (std::abs(closed - sum) > 1e-8 * closed) {
      throw std::logic_error("S_ell series and closed form disagree: " + std::to_string(sum) +
                             " vs " + std::to_string(closed));
    }
  }
  return sum;
}

// ---- Poly -------------------------------------------------------------------

double forward_sum_moment(LawPtr law, double b, double b_prime, double ell, const quad::Options& opt) {
  if (!(ell >= 0.0)) throw DomainError("moment order must be >= 0");
  if (is_integer(ell)) {
    const int n = static_cast<int>(ell);
    double total = 0.0;
    for (int k = 0; k <= n; ++k) {
      total += binomial(n, k) * forward_moment(law, b, k, opt) * forward_moment(law, b_prime, n - k, opt);
    }
    return total;
  }
  // E (X + Y)^ell = int f_X(x) [x^ell + int ell (x + y)^{ell-1} P{Y > y} dy] dx
  const auto x_law = forward_law(law, b);
  const auto y_law = forward_law(law, b_prime);
  const auto inner = [&](double x) {
    const auto integrand = [&](double y) {
      return ell * std::pow(x + y, ell - 1.0) * y_law->survival(y);
    };
    return std::pow(x, ell) + quad::integrate_to_infinity(integrand, 0.0, opt).value;
  };
  return quad::integrate_to_infinity([&](double x) { return x_law->pdf(x) * inner(x); }, 0.0, opt).value;
}

PolyBound poly_bound(LawPtr law, double b, double b_prime, const CouplingParams& params, double ell,
                     const quad::Options& opt) {
  const double s = s_ell(params.q, ell);
  const double fwd = forward_sum_moment(law, b, b_prime, ell, opt);
  const double xi = moment(*law, ell, opt);
  const double inv = 1.0 / (1.0 - params.q);
  return {ell, s, fwd, xi, fwd * s + xi * (inv * inv + inv)};
}

// ---- M(beta, Theta) ---------------------------------------------------------

ResidualMgf::ResidualMgf(LawPtr law, double threshold, int grid_size, const quad::Options& opt)
    : law_(std::move(law)), threshold_(threshold), opt_(opt) {
  if (!(threshold > 0.0)) throw DomainError("M(beta, Theta) needs Theta > 0");
  const int n = std::max(grid_size, 2);
  for (int j = 0; j < n; ++j) {
    const double theta = threshold * j / (n - 1);
    auto fwd = forward_law(law_, theta);
    const OverlapSplit sp(law_, fwd);
    if (sp.residual_empty()) continue;
    Cell cell{theta, sp.kappa(), sp.starts(), {}, fwd};
    for (std::size_t k = 0; k < sp.starts().size(); ++k) cell.lower.push_back(sp.lower(k));
    cells_.push_back(std::move(cell));
  }
}

double ResidualMgf::residual_mgf(const Cell& cell, Side side, double beta) const {
  const RenewalLaw& own = side == Side::first ? *law_ : *cell.forward;
  const RenewalLaw& other = side == Side::first ? *cell.forward : *law_;
  // e^{beta s} (f_own - f_other)^+ in log form: for beta near the abscissa the
  // densities underflow long before e^{beta s} overflows.
  const auto integrand = [&](double s) {
    const double own_log = own.log_survival(s);
    if (own_log == -std::numeric_limits<double>::infinity()) return 0.0;
    const double other_log = other.log_survival(s);
    const double other_rate = other_log == -std::numeric_limits<double>::infinity()
                                  ? 0.0
                                  : other.hazard(s) * std::exp(other_log - own_log);
    const double excess = own.hazard(s) - other_rate;
    return excess > 0.0 ? std::exp(beta * s + own_log) * excess : 0.0;
  };
  double total = 0.0;
  for (std::size_t k = 0; k < cell.starts.size(); ++k) {
    if (cell.lower[k] == side) continue;  // own density is the minimum: no residual mass here
    const double a = cell.starts[k];
    if (k + 1 < cell.starts.size()) {
      total += quad::integrate(integrand, a, cell.starts[k + 1], opt_).value;
    } else {
      total += quad::integrate_to_infinity(integrand, a, opt_).value;
    }
  }
  return total / (1.0 - cell.kappa);
}

ResidualMgf::Value ResidualMgf::operator()(double beta) const {
  if (!(beta >= 0.0)) throw DomainError("M(beta, Theta) needs beta >= 0");
  if (beta == 0.0) return {1.0, 1.0, 1.0, 0.0};
  Value v{mgf(*law_, beta, opt_), 1.0, 0.0, 0.0};
  for (const Cell& cell : cells_) {
    for (Side side : {Side::first, Side::second}) {
      const double r = residual_mgf(cell, side, beta);
      if (r > v.residual) {
        v.residual = r;
        v.worst_theta = cell.theta;
      }
    }
  }
  v.value = std::max(v.fresh, v.residual);
  return v;
}

// ---- example family diagnostics ---------------------------------------------

double example_q(double c, double k, double threshold, const quad::Options& opt) {
  if (!(k > 0.5)) throw DivergenceError("Q(Theta) diverges for K <= 1/2", 0.5);
  const double scale = std::pow(1.0 + threshold, k);
  const auto integrand = [&](double s) {
    const double num = (c + k + c * (s + threshold)) * scale - c;
    return num * num * std::exp(-2.0 * (k + 1.0) * std::log1p(s));
  };
  return std::sqrt(quad::integrate_to_infinity(integrand, 0.0, opt).value);
}

double example_analytic_m(double c, double k, double threshold, double beta, const quad::Options& opt) {
  if (!(beta < c)) throw DivergenceError("analytic M(beta, Theta) needs beta < C", c);
  return std::sqrt(1.0 / (2.0 * (c - beta))) * example_q(c, k, threshold, opt);
}

ExampleDiagnostics example_diagnostics(double c, double k, double threshold, const quad::Options& opt) {
  ExampleDiagnostics d{};
  d.gamma1 = k > 1.0 ? std::min(1.0 / c, 1.0 / (k - 1.0)) : 1.0 / c;
  if (k > 2.0) {
    d.gamma2 = 2.0 / (c * c) + 2.0 / ((k - 1.0) * (k - 2.0));
    d.r_hat = *d.gamma2 / d.gamma1;
  }
  if (k > 0.5) d.q_theta = example_q(c, k, threshold, opt);
  return d;
}

MgfBound residual_mgf_bound(const ResidualMgf& table, double beta) {
  const ResidualMgf::Value v = table(beta);
  MgfBound out{beta, v.fresh, v.residual, v.value, std::nullopt};
  if (const auto* ex = dynamic_cast<const ExampleLaw*>(&table.law()); ex != nullptr && ex->k() > 0.5) {
    out.analytic = example_analytic_m(ex->c(), ex->k(), table.threshold(), beta);
  }
  return out;
}

MgfBound residual_mgf_bound(LawPtr law, double threshold, double beta) {
  return residual_mgf_bound(ResidualMgf(std::move(law), threshold), beta);
}

// ---- beta_0 -----------------------------------------------------------------

BetaSearch beta_search(const ResidualMgf& table, double q, std::optional<double> beta_max, double rel_tol) {
  constexpr double kBetaMin = 1e-9;
  constexpr double kEpsilon = 1e-3;
  if (!(q >= 0.0 && q < 1.0)) throw DomainError("beta search needs q in [0, 1)");
  const double abscissa = table.law().mgf_abscissa();
  const double top = beta_max.value_or(abscissa);
  if (!(top > 0.0)) throw DomainError("beta search needs beta_max > 0");

  const auto admissible = [&](double beta) {
    try {
      return q * table(beta).value < 1.0;
    } catch (const DivergenceError&) {
      return false;
    }
  };
  if (q == 0.0) return {top, top, kEpsilon, 1.0};
  if (top < abscissa && admissible(top)) {
    return {top, top, kEpsilon, 1.0 - q * table(top * (1.0 - kEpsilon)).value};
  }

  double lo = 0.0;
  double hi = top;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (admissible(mid) ? lo : hi) = mid;
  }
  if (lo < kBetaMin) {
    throw NoExponentialRateError("no rate beta >= 1e-9 satisfies q M(beta, Theta) < 1 (q = " +
                                 std::to_string(q) + ")");
  }
  return {lo, top, kEpsilon, 1.0 - q * table(lo * (1.0 - kEpsilon)).value};
}

ExpBound exp_bound(LawPtr law, double b, double b_prime, const CouplingParams& params,
                   const ResidualMgf& table, double beta, const quad::Options& opt) {
  const double m = table(beta).value;
  if (!(params.q * m < 1.0)) {
    throw RateInadmissibleError("q M(beta, Theta) = " + std::to_string(params.q * m) +
                                " >= 1 at beta = " + std::to_string(beta));
  }
  ExpBound out{beta, forward_mgf(law, b, beta, opt), forward_mgf(law, b_prime, beta, opt),
               mgf(*law, beta, opt), m, 0.0};
  out.value = out.forward_mgf_first * out.forward_mgf_second * out.xi_mgf / (1.0 - params.q * m);
  return out;
}

// ---- TV curves --------------------------------------------------------------

TvCurve tv_bound_curve(LawPtr law, double b, const CouplingParams& params, TvMode mode, double order,
                       const std::vector<double>& t_grid, const ResidualMgf* table,
                       const quad::Options& opt) {
  for (double t : t_grid) {
    if (!(t > 0.0)) throw DomainError("TV curve times must be positive");
  }
  const auto stationary = stationary_backward(law, opt);

  std::function<double(double)> epoch_bound;
  if (mode == TvMode::poly) {
    const double s = s_ell(params.q, order);
    const double xi = moment(*law, order, opt);
    const double inv = 1.0 / (1.0 - params.q);
    const double tail = xi * (inv * inv + inv);
    if (is_integer(order)) {
      // Moments from b are shared by every b'.
      const int n = static_cast<int>(order);
      std::vector<double> from_b(static_cast<std::size_t>(n) + 1);
      for (int k = 0; k <= n; ++k) from_b[k] = forward_moment(law, b, k, opt);
      epoch_bound = [=](double bp) {
        double fwd = 0.0;
        for (int k = 0; k <= n; ++k) fwd += binomial(n, k) * from_b[k] * forward_moment(law, bp, n - k, opt);
        return fwd * s + tail;
      };
    } else {
      epoch_bound = [=](double bp) { return forward_sum_moment(law, b, bp, order, opt) * s + tail; };
    }
  } else {
    if (table == nullptr) throw std::invalid_argument("exp-mode TV curve needs the M(beta, Theta) table");
    const double m = (*table)(order).value;
    if (!(params.q * m < 1.0)) {
      throw RateInadmissibleError("q M(beta, Theta) >= 1 at beta = " + std::to_string(order));
    }
    const double shared = forward_mgf(law, b, order, opt) * mgf(*law, order, opt) / (1.0 - params.q * m);
    epoch_bound = [=](double bp) { return shared * forward_mgf(law, bp, order, opt); };
  }

  const auto integrand = [&](double bp) {
    if (law->log_survival(bp) < kNegligibleLogWeight) return 0.0;
    return epoch_bound(bp) * stationary->pdf(bp);
  };
  double integral = 0.0;
  try {
    integral = quad::integrate_to_infinity(integrand, 0.0, opt).value;
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string("stationary average of the coupling-epoch bound diverges "
                                      "(order too large for the law): ") +
                              e.what(),
                          order);
  }

  TvCurve curve{mode, order, integral, {}};
  for (double t : t_grid) {
    const double decay = mode == TvMode::poly ? std::pow(t, -order) : std::exp(-order * t);
    curve.points.emplace_back(t, std::min(1.0, decay * integral));
  }
  return curve;
}

}  // namespace renewal
