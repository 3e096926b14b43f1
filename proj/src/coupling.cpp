#include "renewal/coupling.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "renewal/errors.hpp"

namespace renewal {

namespace {

constexpr int kScanPoints = 256;
// Density differences below this fraction of the larger density count as ties.
constexpr double kTieFraction = 1e-13;
// Overlaps within this distance of 0 or 1 are snapped to the endpoint.
constexpr double kSnap = 1e-12;
constexpr double kInvertTol = 1e-12;
constexpr int kMinorantCells = 256;

int sign_of(double d, double scale) {
  if (std::abs(d) <= kTieFraction * scale) return 0;
  return d > 0.0 ? 1 : -1;
}

void require_unit(double u, const char* name) {
  if (!(u >= 0.0 && u < 1.0)) {
    throw DomainError(std::string(name) + " must lie in [0, 1), got " + std::to_string(u));
  }
}

// Integral of the law's density over [a, b], from its survival function.
double mass_between(const RenewalLaw& law, double a, double b) {
  if (std::isinf(b)) return law.survival(a);
  return law.survival(a) - law.survival(b);
}

}  // namespace

// ---- Minorant ---------------------------------------------------------------

Minorant::Minorant(std::function<double(double)> density, const quad::Options& opt)
    : density_(std::move(density)) {
  // Place knots where the density has not yet decayed below kTailMass of its start.
  const double d0 = std::max(density_(0.0), 1e-300);
  double last = 1.0;
  while (density_(last) > kTailMass * d0 && last < 1e6) last *= 2.0;
  knots_.resize(kMinorantCells + 1);
  cumulative_.assign(knots_.size(), 0.0);
  for (int i = 0; i <= kMinorantCells; ++i) {
    const double x = static_cast<double>(i) / kMinorantCells;
    knots_[i] = last * x * x;
  }
  for (int i = 0; i < kMinorantCells; ++i) {
    cumulative_[i + 1] = cumulative_[i] + quad::integrate(density_, knots_[i], knots_[i + 1], opt).value;
  }
  tail_mass_ = quad::integrate_to_infinity(density_, last, opt).value;
}

double Minorant::cdf(double s) const {
  if (s <= 0.0) return 0.0;
  // Beyond the last knot only tail_mass_ (< kTailMass of the start density) remains.
  if (s >= knots_.back()) return mass();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
  const auto j = static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
  return cumulative_[j] + boost::math::quadrature::gauss<double, 20>::integrate(density_, knots_[j], s);
}

std::shared_ptr<const Minorant> example_minorant(double c, double k, double threshold) {
  if (!(c > 0.0 && k > 0.0 && threshold >= 0.0)) {
    throw DomainError("example minorant needs C > 0, K > 0, Theta >= 0");
  }
  return std::make_shared<const Minorant>([c, k, threshold](double s) {
    return c * std::exp(-c * s - (k + 1.0) * std::log1p(s + threshold));
  });
}

// ---- OverlapSplit -----------------------------------------------------------

OverlapSplit::OverlapSplit(LawPtr first, LawPtr second) : laws_{std::move(first), std::move(second)} {
  horizon_ = std::max(laws_[0]->tail_point(), laws_[1]->tail_point());
  build_exact();
}

OverlapSplit::OverlapSplit(LawPtr first, LawPtr second, std::shared_ptr<const Minorant> minorant)
    : laws_{std::move(first), std::move(second)}, minorant_(std::move(minorant)) {
  horizon_ = std::max(laws_[0]->tail_point(), laws_[1]->tail_point());
  for (int j = 0; j <= kScanPoints; ++j) {
    const double x = static_cast<double>(j) / kScanPoints;
    const double s = horizon_ * x * x;
    const double lower = std::min(laws_[0]->pdf(s), laws_[1]->pdf(s));
    if (minorant_->pdf(s) > lower * (1.0 + 1e-9) + 1e-300) {
      throw DomainError("supplied common density exceeds min(f1, f2) at s = " + std::to_string(s));
    }
  }
  kappa_ = minorant_->mass();
  if (kappa_ < kSnap) kappa_ = 0.0;
  if (kappa_ > 1.0 - kSnap) kappa_ = 1.0;
  starts_ = {0.0};
}

void OverlapSplit::build_exact() {
  const RenewalLaw& f1 = *laws_[0];
  const RenewalLaw& f2 = *laws_[1];

  // Scan f1 - f2 on a grid that is dense near the origin and bisect sign changes.
  int current = 0;
  double last_s = 0.0;
  bool any_difference = false;
  std::vector<int> piece_signs;
  for (int j = 0; j <= kScanPoints; ++j) {
    const double x = static_cast<double>(j) / kScanPoints;
    const double s = horizon_ * x * x;
    const double a = f1.pdf(s);
    const double b = f2.pdf(s);
    const int sg = sign_of(a - b, std::max(a, b));
    if (sg != 0) any_difference = true;
    if (sg != 0 && current != 0 && sg != current) {
      double lo = last_s;
      double hi = s;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fa = f1.pdf(mid);
        const double fb = f2.pdf(mid);
        const int sm = sign_of(fa - fb, std::max(fa, fb));
        if (sm == current) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      crossovers_.push_back(0.5 * (lo + hi));
      piece_signs.push_back(current);
    }
    if (sg != 0) {
      current = sg;
      last_s = s;
    }
  }
  piece_signs.push_back(current);

  starts_.assign(1, 0.0);
  starts_.insert(starts_.end(), crossovers_.begin(), crossovers_.end());
  lower_.clear();
  for (int sg : piece_signs) lower_.push_back(sg > 0 ? Side::second : Side::first);

  const std::size_t pieces = starts_.size();
  common_at_start_.assign(pieces + 1, 0.0);
  residual_at_start_[0].assign(pieces + 1, 0.0);
  residual_at_start_[1].assign(pieces + 1, 0.0);
  for (std::size_t k = 0; k < pieces; ++k) {
    const double a = starts_[k];
    const double b = k + 1 < pieces ? starts_[k + 1] : INFINITY;
    const double m1 = mass_between(f1, a, b);
    const double m2 = mass_between(f2, a, b);
    const bool first_lower = lower_[k] == Side::first;
    const double common = first_lower ? m1 : m2;
    common_at_start_[k + 1] = common_at_start_[k] + common;
    residual_at_start_[0][k + 1] = residual_at_start_[0][k] + std::max(0.0, m1 - common);
    residual_at_start_[1][k + 1] = residual_at_start_[1][k] + std::max(0.0, m2 - common);
  }

  kappa_ = any_difference ? common_at_start_.back() : 1.0;
  if (kappa_ > 1.0 - kSnap) kappa_ = 1.0;
  if (kappa_ < kSnap) kappa_ = 0.0;
}

std::size_t OverlapSplit::piece_of(double s) const {
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), s);
  return static_cast<std::size_t>(std::distance(starts_.begin(), it)) - 1;
}

double OverlapSplit::common_pdf(double s) const {
  if (minorant_) return minorant_->pdf(s);
  return std::min(laws_[0]->pdf(s), laws_[1]->pdf(s));
}

double OverlapSplit::residual_pdf(Side side, double s) const {
  return std::max(0.0, laws_[index(side)]->pdf(s) - common_pdf(s));
}

double OverlapSplit::common_cdf(double s) const {
  if (s <= 0.0) return 0.0;
  if (minorant_) return minorant_->cdf(s);
  const std::size_t k = piece_of(s);
  return common_at_start_[k] + mass_between(*laws_[index(lower_[k])], starts_[k], s);
}

double OverlapSplit::residual_cdf(Side side, double s) const {
  if (s <= 0.0) return 0.0;
  const RenewalLaw& own = *laws_[index(side)];
  if (minorant_) return std::max(0.0, own.cdf(s) - minorant_->cdf(s));
  const std::size_t k = piece_of(s);
  const double base = residual_at_start_[index(side)][k];
  if (lower_[k] == side) return base;
  const RenewalLaw& other = *laws_[1 - index(side)];
  const double excess = mass_between(own, starts_[k], s) - mass_between(other, starts_[k], s);
  return base + std::max(0.0, excess);
}

double OverlapSplit::invert(const std::function<double(double)>& cdf, double y, double lo,
                            double hi) const {
  if (std::isinf(hi)) {
    hi = std::max(lo + 1.0, horizon_);
    while (cdf(hi) <= y) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e15) return lo;
    }
  }
  while (hi - lo > kInvertTol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (cdf(mid) <= y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double OverlapSplit::common_quantile(double y) const {
  if (common_empty()) throw DomainError("no common part: overlap is zero");
  if (!(y >= 0.0 && y < kappa_)) throw DomainError("common quantile level outside [0, kappa)");
  if (y == 0.0) return 0.0;
  const auto cdf = [this](double s) { return common_cdf(s); };
  if (minorant_) return invert(cdf, y, 0.0, INFINITY);
  const auto it = std::upper_bound(common_at_start_.begin(), common_at_start_.end() - 1, y);
  const std::size_t k = static_cast<std::size_t>(std::distance(common_at_start_.begin(), it)) - 1;
  const double hi = k + 1 < starts_.size() ? starts_[k + 1] : INFINITY;
  return invert(cdf, y, starts_[k], hi);
}

double OverlapSplit::residual_quantile(Side side, double y) const {
  if (residual_empty()) throw DomainError("no residual part: overlap is one");
  if (!(y >= 0.0 && y < 1.0 - kappa_)) throw DomainError("residual quantile level outside [0, 1 - kappa)");
  const auto cdf = [this, side](double s) { return residual_cdf(side, s); };
  if (minorant_) return invert(cdf, y, 0.0, INFINITY);
  const auto& table = residual_at_start_[index(side)];
  const auto it = std::upper_bound(table.begin(), table.end() - 1, y);
  std::size_t k = static_cast<std::size_t>(std::distance(table.begin(), it)) - 1;
  // A level at (or numerically past) the final cumulative value falls in the last piece
  // carrying residual mass.
  while (k > 0 && lower_[k] == side) --k;
  const double hi = k + 1 < starts_.size() ? starts_[k + 1] : INFINITY;
  return invert(cdf, y, starts_[k], hi);
}

double overlap(LawPtr first, LawPtr second) {
  return OverlapSplit(std::move(first), std::move(second)).kappa();
}

OverlapSplit split(LawPtr first, LawPtr second) {
  return OverlapSplit(std::move(first), std::move(second));
}

OverlapSplit split(LawPtr first, LawPtr second, std::shared_ptr<const Minorant> minorant) {
  return OverlapSplit(std::move(first), std::move(second), std::move(minorant));
}

CoupledPair coupled_sample(const OverlapSplit& s, double u, double u_common, double u_residual) {
  require_unit(u, "u");
  require_unit(u_common, "u'");
  require_unit(u_residual, "u''");
  const double kappa = s.kappa();
  if (u < kappa) {
    const double x = s.common_quantile(kappa * u_common);
    return {x, x, true};
  }
  const double y = (1.0 - kappa) * u_residual;
  return {s.residual_quantile(Side::first, y), s.residual_quantile(Side::second, y), false};
}

}  // namespace renewal
