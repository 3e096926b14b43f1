#include "renewal/law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

#include "renewal/errors.hpp"

namespace renewal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuantileTol = 1e-12;
// Conditioning on survival below e^-700 is treated as conditioning on a null event.
constexpr double kNullLogSurvival = -700.0;

void require_time(double s, const char* what) {
  if (!(s >= 0.0)) {
    throw DomainError(std::string(what) + " must be a nonnegative time, got " + std::to_string(s));
  }
}

double require_positive(const nlohmann::json& params, const std::string& field) {
  const std::string path = "law.params." + field;
  if (!params.contains(field)) throw ConfigError(path, "missing");
  if (!params.at(field).is_number()) throw ConfigError(path, "must be a number");
  const double v = params.at(field).get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path, "must be positive and finite");
  return v;
}

}  // namespace

// ---- RenewalLaw -------------------------------------------------------------

double RenewalLaw::hazard(double s) const {
  const double ls = log_survival(s);
  if (ls == -kInf) return kInf;
  return pdf(s) / std::exp(ls);
}

double RenewalLaw::survival(double s) const { return std::exp(log_survival(s)); }

double RenewalLaw::cdf(double s) const { return -std::expm1(log_survival(s)); }

double RenewalLaw::quantile(double u) const { return bisect_quantile(u); }

void RenewalLaw::init_tail() {
  const double target = std::log(kTailMass);
  double lo = 0.0;
  double hi = 1.0;
  while (log_survival(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) {
      tail_ = hi;
      return;
    }
  }
  for (int i = 0; i < 100 && hi - lo > 1e-9 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (log_survival(mid) > target ? lo : hi) = mid;
  }
  tail_ = hi;
}

double RenewalLaw::bisect_quantile(double u) const {
  if (u == 0.0) return 0.0;
  const double target = std::log1p(-u);
  double lo = 0.0;
  double hi = std::max(1.0, tail_ > 0.0 ? 0.25 * tail_ : 1.0);
  while (log_survival(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) throw DomainError("quantile search escaped to infinity for u = " + std::to_string(u));
  }
  while (hi - lo > kQuantileTol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (log_survival(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---- ExponentialLaw -----------------------------------------------------------

ExponentialLaw::ExponentialLaw(double rate) : rate_(rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("exponential rate must be positive");
  init_tail();
}

double ExponentialLaw::log_survival(double s) const { return -rate_ * s; }

double ExponentialLaw::pdf(double s) const { return rate_ * std::exp(-rate_ * s); }

double ExponentialLaw::hazard(double) const { return rate_; }

double ExponentialLaw::quantile(double u) const { return -std::log1p(-u) / rate_; }

nlohmann::json ExponentialLaw::spec() const {
  return {{"family", "exponential"}, {"params", {{"rate", rate_}}}};
}

// ---- ExampleLaw -------------------------------------------------------------

ExampleLaw::ExampleLaw(double c, double k) : c_(c), k_(k) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("example law needs C > 0");
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("example law needs K > 0");
  init_tail();
}

double ExampleLaw::log_survival(double s) const { return -c_ * s - k_ * std::log1p(s); }

double ExampleLaw::pdf(double s) const {
  return std::exp(-c_ * s - (k_ + 1.0) * std::log1p(s)) * (c_ + k_ + c_ * s);
}

double ExampleLaw::hazard(double s) const { return c_ + k_ / (1.0 + s); }

nlohmann::json ExampleLaw::spec() const {
  return {{"family", "example"}, {"params", {{"C", c_}, {"K", k_}}}};
}

// ---- HazardLaw --------------------------------------------------------------

namespace {

constexpr double kHazardCell = 0.125;
constexpr double kHazardCumulativeCap = 50.0;
using Legendre = boost::math::quadrature::gauss<double, 20>;

}  // namespace

HazardLaw::HazardLaw(std::function<double(double)> hazard, double tail_rate,
                     std::vector<double> breakpoints, nlohmann::json spec)
    : hazard_(std::move(hazard)), tail_rate_(tail_rate), spec_(std::move(spec)) {
  if (!(tail_rate > 0.0)) throw DomainError("hazard law needs a positive tail rate");
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::remove_if(breakpoints.begin(), breakpoints.end(),
                                   [](double b) { return !(b > 0.0); }),
                    breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

  knots_.push_back(0.0);
  cumulative_.push_back(0.0);
  std::size_t next_break = 0;
  const double limit = (breakpoints.empty() ? 0.0 : breakpoints.back()) +
                       2.0 * kHazardCumulativeCap / tail_rate;
  while (cumulative_.back() < kHazardCumulativeCap && knots_.back() < limit) {
    const double a = knots_.back();
    double b = a + kHazardCell;
    while (next_break < breakpoints.size() && breakpoints[next_break] <= a) ++next_break;
    if (next_break < breakpoints.size() && breakpoints[next_break] < b) b = breakpoints[next_break];
    const double piece = Legendre::integrate(hazard_, a, b);
    knots_.push_back(b);
    cumulative_.push_back(cumulative_.back() + piece);
  }
  init_tail();
}

double HazardLaw::cumulative_hazard(double s) const {
  if (s >= knots_.back()) {
    return cumulative_.back() +
           quad::integrate(hazard_, knots_.back(), s, quad::Options{.rel_tol = 1e-8}).value;
  }
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
  const auto j = static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
  if (s == knots_[j]) return cumulative_[j];
  return cumulative_[j] + Legendre::integrate(hazard_, knots_[j], s);
}

double HazardLaw::log_survival(double s) const { return -cumulative_hazard(s); }

double HazardLaw::pdf(double s) const { return hazard_(s) * std::exp(-cumulative_hazard(s)); }

LawPtr make_hazard_table(std::vector<std::pair<double, double>> knots) {
  if (knots.empty()) throw ConfigError("law.params.knots", "needs at least one (s, lambda) knot");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto [s, rate] = knots[i];
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("law.params.knots", "knot times must be >= 0");
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw ConfigError("law.params.knots", "hazard values must be >= 0");
    if (i > 0 && !(s > knots[i - 1].first)) {
      throw ConfigError("law.params.knots", "knot times must be strictly increasing");
    }
  }
  if (!(knots.back().second > 0.0)) {
    throw ConfigError("law.params.knots", "last hazard value must be positive (proper law)");
  }
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> breaks;
  for (const auto& [s, rate] : knots) {
    rows.push_back({s, rate});
    breaks.push_back(s);
  }
  auto hazard = [knots](double s) {
    if (s <= knots.front().first) return knots.front().second;
    if (s >= knots.back().first) return knots.back().second;
    const auto it = std::upper_bound(knots.begin(), knots.end(), s,
                                     [](double x, const auto& k) { return x < k.first; });
    const auto& [s1, l1] = *it;
    const auto& [s0, l0] = *(it - 1);
    return l0 + (l1 - l0) * (s - s0) / (s1 - s0);
  };
  nlohmann::json spec = {{"family", "hazard-table"}, {"params", {{"knots", rows}}}};
  return std::make_shared<HazardLaw>(hazard, knots.back().second, std::move(breaks), std::move(spec));
}

// ---- ForwardLaw -------------------------------------------------------------

ForwardLaw::ForwardLaw(LawPtr base, double elapsed) : base_(std::move(base)), elapsed_(elapsed) {
  require_time(elapsed, "elapsed time");
  log_norm_ = base_->log_survival(elapsed);
  if (!(log_norm_ > kNullLogSurvival)) {
    throw NullConditioningError("F(theta) is numerically 1 at theta = " + std::to_string(elapsed));
  }
  init_tail();
}

double ForwardLaw::log_survival(double s) const {
  return base_->log_survival(s + elapsed_) - log_norm_;
}

double ForwardLaw::pdf(double s) const { return base_->pdf(s + elapsed_) * std::exp(-log_norm_); }

double ForwardLaw::hazard(double s) const { return base_->hazard(s + elapsed_); }

nlohmann::json ForwardLaw::spec() const {
  return {{"family", "forward"}, {"params", {{"elapsed", elapsed_}}}, {"base", base_->spec()}};
}

// ---- StationaryBackwardLaw ---------------------------------------------------

namespace {
constexpr int kStationaryCells = 128;
}

StationaryBackwardLaw::StationaryBackwardLaw(LawPtr base, const quad::Options& opt)
    : base_(std::move(base)) {
  mean_xi_ = moment(*base_, 1.0, opt);
  if (!std::isfinite(mean_xi_)) throw DivergenceError("renewal law has infinite mean", kInf);
  const auto surv = [this](double u) { return base_->survival(u); };
  const double last = base_->tail_point();
  knots_.resize(kStationaryCells + 1);
  for (int i = 0; i <= kStationaryCells; ++i) knots_[i] = last * i / kStationaryCells;
  suffix_.assign(knots_.size(), 0.0);
  suffix_.back() = quad::integrate_to_infinity(surv, last, opt).value;
  for (int i = kStationaryCells - 1; i >= 0; --i) {
    suffix_[i] = suffix_[i + 1] + quad::integrate(surv, knots_[i], knots_[i + 1], opt).value;
  }
  mean_ = quad::integrate_to_infinity([this](double u) { return u * base_->survival(u); }, 0.0, opt)
              .value /
          mean_xi_;
  init_tail();
}

double StationaryBackwardLaw::tail_integral(double s) const {
  const auto surv = [this](double u) { return base_->survival(u); };
  if (s >= knots_.back()) return quad::integrate_to_infinity(surv, s).value;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
  const auto j = static_cast<std::size_t>(std::distance(knots_.begin(), it));
  return quad::integrate(surv, s, knots_[j]).value + suffix_[j];
}

double StationaryBackwardLaw::log_survival(double s) const {
  const double tail = tail_integral(s);
  return tail > 0.0 ? std::log(tail / mean_xi_) : -kInf;
}

double StationaryBackwardLaw::pdf(double s) const { return base_->survival(s) / mean_xi_; }

nlohmann::json StationaryBackwardLaw::spec() const {
  return {{"family", "stationary-backward"}, {"base", base_->spec()}};
}

// ---- operations -------------------------------------------------------------

Evaluation evaluate(const RenewalLaw& law, double s) {
  require_time(s, "evaluation point");
  return {law.cdf(s), law.pdf(s), law.hazard(s)};
}

quad::Result moment_integral(const RenewalLaw& law, double order, const quad::Options& opt) {
  if (!(order >= 0.0) || !std::isfinite(order)) {
    throw DomainError("moment order must be >= 0, got " + std::to_string(order));
  }
  if (order == 0.0) return {1.0, 0.0, 0.0};
  const auto integrand = [&](double s) {
    if (s <= 0.0) return order == 1.0 ? 1.0 : 0.0;
    return order * std::exp((order - 1.0) * std::log(s) + law.log_survival(s));
  };
  try {
    return quad::integrate_to_infinity(integrand, 0.0, opt);
  } catch (const DivergenceError&) {
    throw DivergenceError("moment of order " + std::to_string(order) +
                              " diverges: s^order (1 - F(s)) does not decay",
                          order);
  }
}

double moment(const RenewalLaw& law, double order, const quad::Options& opt) {
  return moment_integral(law, order, opt).value;
}

double mgf(const RenewalLaw& law, double beta, const quad::Options& opt) {
  if (!(beta >= 0.0)) throw DomainError("MGF rate must be >= 0, got " + std::to_string(beta));
  if (beta == 0.0) return 1.0;
  const double abscissa = law.mgf_abscissa();
  if (beta >= abscissa) {
    throw DivergenceError("E exp(beta xi) diverges for beta >= " + std::to_string(abscissa) +
                              " (requested beta = " + std::to_string(beta) + ")",
                          abscissa);
  }
  const auto integrand = [&](double s) { return std::exp(beta * s + law.log_survival(s)); };
  try {
    return 1.0 + beta * quad::integrate_to_infinity(integrand, 0.0, opt).value;
  } catch (const DivergenceError&) {
    throw DivergenceError("E exp(beta xi) does not converge at beta = " + std::to_string(beta) +
                              " (abscissa " + std::to_string(abscissa) + ")",
                          abscissa);
  }
}

double quantile(const RenewalLaw& law, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw DomainError("quantile level must lie in [0, 1), got " + std::to_string(u));
  return law.quantile(u);
}

double sample(const RenewalLaw& law, UniformStream& rng) { return law.quantile(rng.next()); }

std::shared_ptr<const ForwardLaw> forward_law(LawPtr law, double elapsed) {
  return std::make_shared<const ForwardLaw>(std::move(law), elapsed);
}

std::shared_ptr<const StationaryBackwardLaw> stationary_backward(LawPtr law, const quad::Options& opt) {
  return std::make_shared<const StationaryBackwardLaw>(std::move(law), opt);
}

LawPtr make_law(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ConfigError("law", "must be a table with `family` and `params`");
  if (!spec.contains("family") || !spec.at("family").is_string()) {
    throw ConfigError("law.family", "missing or not a string");
  }
  const std::string family = spec.at("family").get<std::string>();
  const nlohmann::json params = spec.value("params", nlohmann::json::object());
  if (family == "exponential") {
    return std::make_shared<ExponentialLaw>(require_positive(params, "rate"));
  }
  if (family == "example") {
    return std::make_shared<ExampleLaw>(require_positive(params, "C"), require_positive(params, "K"));
  }
  if (family == "hazard-table") {
    if (!params.contains("knots") || !params.at("knots").is_array()) {
      throw ConfigError("law.params.knots", "must be a list of [s, lambda] pairs");
    }
    std::vector<std::pair<double, double>> knots;
    for (const auto& row : params.at("knots")) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
        throw ConfigError("law.params.knots", "each knot must be a pair [s, lambda]");
      }
      knots.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
    return make_hazard_table(std::move(knots));
  }
  throw ConfigError("law.family", "unknown family '" + family + "'");
}

}  // namespace renewal
