#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "renewal/bounds.hpp"
#include "renewal/errors.hpp"

using namespace renewal;

namespace {

LawPtr exp_law(double rate) { return std::make_shared<ExponentialLaw>(rate); }
LawPtr example_law(double c, double k) { return std::make_shared<ExampleLaw>(c, k); }

CouplingParams with_q(CouplingParams p, double q) {
  p.q = q;
  p.pi = 1.0 - q;
  return p;
}

}  // namespace

TEST_CASE("Lorden threshold") {
  const LordenBound lb = lorden_p0(*exp_law(1.0), 4.0);
  CHECK(lb.ratio == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(lb.p0 == doctest::Approx(0.5).epsilon(1e-10));
  try {
    lorden_p0(*exp_law(1.0), 1.5);
    FAIL("expected ThresholdTooSmallError");
  } catch (const ThresholdTooSmallError& e) {
    CHECK(e.lorden_ratio() == doctest::Approx(2.0));
  }
  CHECK_THROWS_AS(lorden_p0(*exp_law(1.0), 2.0), ThresholdTooSmallError);
  const LawPtr ex = example_law(1.0, 3.0);
  const double ratio = oracle::example_moment(1.0, 3.0, 2.0) / oracle::example_moment(1.0, 3.0, 1.0);
  CHECK(lorden_p0(*ex, 3.0).ratio == doctest::Approx(ratio).epsilon(1e-8));
}

TEST_CASE("kappa_Theta") {
  SUBCASE("exponential: every forward law equals the base law") {
    const KappaTheta k = kappa_theta(exp_law(1.0), 4.0);
    CHECK(k.value == 1.0);
    CHECK(k.margin == 0.0);
    CHECK(k.evaluations >= 256);
  }
  SUBCASE("example family: bounded below by the minorant mass and by the grid") {
    for (double k : {2.0, 3.0}) {
      const LawPtr law = example_law(1.0, k);
      const double theta = 2.0 * oracle::example_moment(1.0, k, 2.0) / oracle::example_moment(1.0, k, 1.0);
      const KappaTheta kt = kappa_theta(law, theta);
      CHECK(kt.value <= kt.grid_min);
      CHECK(kt.value >= oracle::example_minorant_mass(1.0, k, theta));
      // The overlap decreases in theta here, so the infimum sits at Theta.
      CHECK(kt.argmin == doctest::Approx(theta));
      CHECK(kt.grid_min == doctest::Approx(overlap(law, forward_law(law, theta))).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(kappa_theta(exp_law(1.0), 0.0), DomainError);
}

TEST_CASE("coupling parameters") {
  const CouplingParams p = coupling_params(exp_law(1.0), 4.0);
  CHECK(p.lorden_ratio == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(p.p0 == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(p.kappa_theta == 1.0);
  CHECK(p.q == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(p.pi + p.q == 1.0);
}

TEST_CASE("optimized threshold beats the default") {
  const LawPtr law = example_law(1.0, 2.0);
  const double ratio = oracle::example_moment(1.0, 2.0, 2.0) / oracle::example_moment(1.0, 2.0, 1.0);
  const double best = optimize_threshold(law);
  CHECK(best > ratio);
  CHECK(coupling_params(law, best).pi >= coupling_params(law, 2.0 * ratio).pi);
}

TEST_CASE("S_ell series") {
  CHECK(s_ell(0.5, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s_ell(0.5, 2.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s_ell(0.5, 3.0) == doctest::Approx(12.0).epsilon(1e-12));
  for (int i = 1; i <= 9; ++i) {
    const double q = i / 10.0;
    for (int ell = 1; ell <= 3; ++ell) {
      CHECK(s_ell(q, ell) == doctest::Approx(oracle::s_ell(q, ell)).epsilon(1e-10));
      CHECK(s_ell_closed_form(q, ell) == doctest::Approx(oracle::s_ell(q, ell)).epsilon(1e-12));
    }
  }
  for (double ell : {1.5, 2.5, 4.0, 5.0}) {
    CHECK(s_ell(0.3, ell) == doctest::Approx(oracle::s_ell_brute(0.3, ell, 2000)).epsilon(1e-10));
  }
  CHECK(s_ell(0.0, 2.5) == 1.0);
  CHECK(s_ell(0.5, 1.5) < s_ell(0.5, 2.0));
  CHECK(s_ell(0.4, 2.0) < s_ell(0.5, 2.0));
  CHECK_THROWS_AS(s_ell(1.0, 2.0), DivergenceError);
  CHECK_THROWS_AS(s_ell(0.5, 0.5), DomainError);
}

TEST_CASE("Poly bound") {
  const LawPtr law = exp_law(1.0);
  const CouplingParams p = coupling_params(law, 4.0);
  SUBCASE("exponential reference") {
    const PolyBound pb = poly_bound(law, 0.0, 0.0, p, 1.0);
    CHECK(pb.forward_moment == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(pb.s_ell == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(pb.xi_moment == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(pb.value == doctest::Approx(10.0).epsilon(1e-9));
    // E(X + Y)^2 = 6 for independent Exp(1); S_2 = 4, E xi^2 = 2.
    CHECK(poly_bound(law, 0.0, 3.0, p, 2.0).value == doctest::Approx(6.0 * 4.0 + 2.0 * 6.0).epsilon(1e-9));
  }
  SUBCASE("non-integer order by nested quadrature") {
    // t1 + t1' ~ Gamma(2, 1): E S^1.5 = Gamma(3.5) / Gamma(2).
    CHECK(forward_sum_moment(law, 0.0, 0.0, 1.5) == doctest::Approx(std::tgamma(3.5)).epsilon(1e-7));
  }
  SUBCASE("nondecreasing in q and in b") {
    const LawPtr ex = example_law(1.0, 3.0);
    const CouplingParams base = coupling_params(ex, 1.5);
    double last = 0.0;
    for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double v = poly_bound(ex, 0.0, 0.5, with_q(base, q), 2.0).value;
      CHECK(v >= last);
      last = v;
    }
    last = 0.0;
    for (double b : {0.0, 0.5, 1.0, 2.0, 4.0}) {
      const double v = poly_bound(ex, b, 0.5, base, 1.0).value;
      CHECK(v >= last);
      last = v;
    }
  }
}

TEST_CASE("M(beta, Theta) and beta0 for the exponential reference") {
  const LawPtr law = exp_law(1.0);
  const CouplingParams p = coupling_params(law, 4.0);
  const ResidualMgf table(law, 4.0);
  const auto v = table(0.1);
  CHECK(v.fresh == doctest::Approx(10.0 / 9.0).epsilon(1e-10));
  CHECK(v.value == doctest::Approx(10.0 / 9.0).epsilon(1e-10));
  CHECK(table(0.0).value == 1.0);
  const BetaSearch bs = beta_search(table, p.q);
  CHECK(bs.beta0 == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(p.q * table(bs.beta0 * (1.0 - bs.epsilon)).value < 1.0);
  CHECK(bs.margin > 0.0);
  const ExpBound eb = exp_bound(law, 0.0, 0.0, p, table, 0.1);
  CHECK(eb.value == doctest::Approx(9000.0 / 2916.0).epsilon(1e-9));
  CHECK(exp_bound(law, 0.0, 0.0, p, table, 0.0).value == doctest::Approx(1.0 / (1.0 - p.q)).epsilon(1e-12));
  CHECK_THROWS_AS(exp_bound(law, 0.0, 0.0, p, table, 0.6), RateInadmissibleError);
  CHECK_THROWS_AS(table(1.0), DivergenceError);
  CHECK(beta_search(table, 0.0).beta0 == 1.0);
}

TEST_CASE("example family: analytic constants") {
  // Q(Theta)^2 closed form at C = 1, K = 2, Theta = 2 is 429.5.
  CHECK(oracle::example_q_squared(1.0, 2.0, 2.0) == doctest::Approx(429.5).epsilon(1e-14));
  for (double k : {2.0, 3.0}) {
    for (double theta : {0.5, 2.0, 5.0}) {
      const double q = example_q(1.0, k, theta);
      CHECK(q * q == doctest::Approx(oracle::example_q_squared(1.0, k, theta)).epsilon(1e-9));
    }
  }
  CHECK(example_analytic_m(1.0, 2.0, 2.0, 0.2) ==
        doctest::Approx(std::sqrt(1.0 / 1.6) * std::sqrt(429.5)).epsilon(1e-9));
  CHECK_THROWS_AS(example_q(1.0, 0.4, 1.0), DivergenceError);
  CHECK_THROWS_AS(example_analytic_m(1.0, 2.0, 1.0, 1.0), DivergenceError);
  const ExampleDiagnostics d = example_diagnostics(1.0, 3.0, 1.5);
  CHECK(d.gamma1 == doctest::Approx(0.5));
  CHECK(d.q_theta.has_value());
}

TEST_CASE("example family: generic M, beta0 and the admissible rates") {
  for (double k : {2.0, 3.0}) {
    const LawPtr law = example_law(1.0, k);
    const double theta = 2.0 * lorden_p0(*law, 1e9).ratio;
    const CouplingParams p = coupling_params(law, theta);
    const ResidualMgf table(law, theta);
    double last = 1.0;
    for (double beta : {0.05, 0.1, 0.2, 0.4, 0.6, 0.8}) {
      const MgfBound m = residual_mgf_bound(table, beta);
      REQUIRE(m.analytic.has_value());
      CHECK(m.value <= *m.analytic);
      CHECK(m.value >= m.fresh);
      CHECK(m.value >= last);  // nondecreasing in beta
      last = m.value;
    }
    const BetaSearch bs = beta_search(table, p.q);
    CHECK(bs.beta0 > 0.0);
    CHECK(bs.beta0 < 1.0);
    CHECK(p.q * table(bs.beta0 * (1.0 - bs.epsilon)).value < 1.0);
    CHECK(p.q * table(std::min(0.999999, bs.beta0 * 1.001)).value >= 1.0);
  }
}

TEST_CASE("TV bound curves") {
  const LawPtr law = exp_law(1.0);
  const CouplingParams p = coupling_params(law, 4.0);
  const std::vector<double> ts{1.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  SUBCASE("exponential poly curve is min(1, 10 / t)") {
    const TvCurve c = tv_bound_curve(law, 0.0, p, TvMode::poly, 1.0, ts);
    CHECK(c.integral == doctest::Approx(10.0).epsilon(1e-8));
    for (const auto& [t, v] : c.points) CHECK(v == doctest::Approx(std::min(1.0, 10.0 / t)).epsilon(1e-8));
  }
  SUBCASE("exponential exp curve is min(1, 3.086 e^{-0.1 t})") {
    const ResidualMgf table(law, 4.0);
    const TvCurve c = tv_bound_curve(law, 0.0, p, TvMode::exp, 0.1, ts, &table);
    for (const auto& [t, v] : c.points) {
      CHECK(v == doctest::Approx(std::min(1.0, 9000.0 / 2916.0 * std::exp(-0.1 * t))).epsilon(1e-8));
    }
  }
  SUBCASE("nonincreasing and vanishing for the example family") {
    const LawPtr ex = example_law(1.0, 2.0);
    const CouplingParams pe = coupling_params(ex, 2.0);
    const std::vector<double> long_grid{0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1e4};
    const TvCurve c = tv_bound_curve(ex, 0.0, pe, TvMode::poly, 2.0, long_grid);
    for (std::size_t i = 1; i < c.points.size(); ++i) CHECK(c.points[i].second <= c.points[i - 1].second);
    CHECK(c.points.back().second < 1e-6);
  }
  CHECK_THROWS_AS(tv_bound_curve(law, 0.0, p, TvMode::poly, 1.0, {0.0}), DomainError);
}

TEST_CASE("residual MGF near the abscissa stays finite") {
  // The residual densities underflow near s = 745 while e^{0.95 s} is still representable.
  const double c = 1.0, k = 2.0, theta = 1.9;
  const ResidualMgf table(example_law(c, k), theta, 16);
  const double q = std::sqrt(oracle::example_q_squared(c, k, theta));
  for (double beta : {0.9, 0.95, 0.99}) {
    const ResidualMgf::Value v = table(beta);
    CHECK(std::isfinite(v.value));
    CHECK(v.residual <= std::sqrt(1.0 / (2.0 * (c - beta))) * q);
  }
}
