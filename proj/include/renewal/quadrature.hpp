#pragma once

// Adaptive quadrature on finite intervals and on [a, inf).
//
// Finite intervals are handed to Boost.Math's adaptive Gauss-Kronrod (31 pt).
// Semi-infinite integrals are split into geometrically growing segments and
// truncated once two consecutive segments contribute less than the tolerance;
// a run that reaches `max_upper` without settling is reported as divergent.

#include <cmath>
#include <limits>
#include <span>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "renewal/errors.hpp"

namespace renewal::quad {

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-15;
  unsigned max_depth = 18;
  double first_step = 1.0;     // width of the first segment for [a, inf)
  double max_upper = 1e7;      // give up (divergence) beyond this abscissa
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  double upper = 0.0;  // truncation point actually used for [a, inf)
};

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  if (!(b > a)) return {0.0, 0.0, b};
  double err = 0.0;
  double l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, opt.max_depth, opt.rel_tol, &err, &l1);
  return {v, err, b};
}

/// Sum of integrals over consecutive knot intervals. Knots must be sorted.
template <class F>
Result integrate_pieces(F&& f, std::span<const double> knots, const Options& opt = {}) {
  Result total;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const Result r = integrate(f, knots[i], knots[i + 1], opt);
    total.value += r.value;
    total.error += r.error;
  }
  total.upper = knots.empty() ? 0.0 : knots.back();
  return total;
}

template <class F>
Result integrate_to_infinity(F&& f, double a, const Options& opt = {}) {
  Result total;
  double lo = a;
  double width = opt.first_step;
  int quiet = 0;
  while (true) {
    const double hi = lo + width;
    const Result seg = integrate(f, lo, hi, opt);
    if (!std::isfinite(seg.value)) {
      throw DivergenceError("integrand is not finite on [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]",
                            std::numeric_limits<double>::quiet_NaN());
    }
    total.value += seg.value;
    total.error += seg.error;
    lo = hi;
    if (std::abs(seg.value) <= opt.abs_tol + opt.rel_tol * std::abs(total.value)) {
      if (++quiet >= 2) break;
    } else {
      quiet = 0;
    }
    if (lo > opt.max_upper) {
      throw DivergenceError("integral over [" + std::to_string(a) +
                                ", inf) does not settle before " + std::to_string(opt.max_upper),
                            std::numeric_limits<double>::quiet_NaN());
    }
    width *= 2.0;
  }
  total.upper = lo;
  return total;
}

}  // namespace renewal::quad
