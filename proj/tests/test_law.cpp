#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "renewal/errors.hpp"
#include "renewal/law.hpp"
#include "renewal/rng.hpp"

using namespace renewal;

namespace {

LawPtr exp_law(double rate) { return std::make_shared<ExponentialLaw>(rate); }
LawPtr example_law(double c, double k) { return std::make_shared<ExampleLaw>(c, k); }

}  // namespace

TEST_CASE("exponential law closed forms") {
  const LawPtr law = exp_law(1.0);
  const Evaluation e = evaluate(*law, 1.0);
  CHECK(e.cdf == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
  CHECK(e.pdf == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(e.hazard == doctest::Approx(1.0).epsilon(1e-15));
  for (int n = 1; n <= 4; ++n) {
    CHECK(moment(*law, n) == doctest::Approx(oracle::exp_moment(1.0, n)).epsilon(1e-9));
  }
  CHECK(moment(*exp_law(2.5), 2) == doctest::Approx(oracle::exp_moment(2.5, 2)).epsilon(1e-9));
  CHECK(mgf(*law, 0.1) == doctest::Approx(oracle::exp_mgf(1.0, 0.1)).epsilon(1e-10));
  CHECK(mgf(*law, 0.5) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(mgf(*law, 0.0) == 1.0);
}

TEST_CASE("operation errors") {
  const LawPtr law = exp_law(1.0);
  CHECK_THROWS_AS(evaluate(*law, -0.5), DomainError);
  CHECK_THROWS_AS(quantile(*law, 1.0), DomainError);
  CHECK_THROWS_AS(quantile(*law, -0.1), DomainError);
  CHECK_THROWS_AS(moment(*law, -1.0), DomainError);
  CHECK_THROWS_AS(mgf(*law, -0.1), DomainError);
  try {
    mgf(*law, 1.0);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.threshold() == 1.0);
  }
  CHECK_THROWS_AS(ExponentialLaw(0.0), DomainError);
  CHECK_THROWS_AS(ExampleLaw(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(forward_law(law, 800.0), NullConditioningError);
}

TEST_CASE("example family survival factorisation") {
  for (double k : {2.0, 3.0, 0.7}) {
    const LawPtr law = example_law(1.0, k);
    for (double s : {0.0, 0.1, 1.0, 3.0, 10.0, 40.0}) {
      // 1 - F = e^{-Cs} (1 + s)^{-K}, as the product of the two factors.
      CHECK(law->survival(s) == doctest::Approx(oracle::example_survival(1.0, k, s)).epsilon(1e-13));
      CHECK(law->pdf(s) == doctest::Approx(oracle::example_pdf(1.0, k, s)).epsilon(1e-13));
      CHECK(law->hazard(s) == doctest::Approx(1.0 + k / (1.0 + s)).epsilon(1e-13));
    }
  }
}

TEST_CASE("example family moments against Simpson") {
  for (double k : {2.0, 3.0}) {
    const LawPtr law = example_law(1.0, k);
    for (double order : {1.0, 2.0, 1.5}) {
      CHECK(moment(*law, order) == doctest::Approx(oracle::example_moment(1.0, k, order)).epsilon(1e-8));
    }
    // E xi <= min(1/C, 1/(K-1)).
    CHECK(moment(*law, 1.0) <= std::min(1.0, 1.0 / (k - 1.0)));
  }
}

TEST_CASE("density is minus the derivative of the survival function") {
  for (const LawPtr& law : {exp_law(0.7), example_law(1.0, 2.0), make_hazard_table({{0.0, 0.5}, {1.0, 2.0}, {3.0, 1.0}})}) {
    for (double s : {0.3, 1.7, 4.2}) {
      const double h = 1e-5;
      const double slope = (law->survival(s - h) - law->survival(s + h)) / (2.0 * h);
      CHECK(law->pdf(s) == doctest::Approx(slope).epsilon(1e-7));
    }
  }
}

TEST_CASE("quantile round trip") {
  const std::vector<LawPtr> laws = {exp_law(1.0), example_law(1.0, 2.0), example_law(1.0, 3.0),
                                    make_hazard_table({{0.0, 0.5}, {1.0, 2.0}, {3.0, 1.0}}),
                                    forward_law(example_law(1.0, 2.0), 1.3)};
  for (const LawPtr& law : laws) {
    for (int i = 0; i < 1000; ++i) {
      const double u = (i + 0.5) / 1000.0;
      CHECK(law->cdf(quantile(*law, u)) == doctest::Approx(u).epsilon(1e-10));
    }
  }
  CHECK(quantile(*exp_law(1.0), 0.0) == 0.0);
}

TEST_CASE("hazard table") {
  SUBCASE("constant table is exponential") {
    const LawPtr law = make_hazard_table({{0.0, 2.0}});
    for (double s : {0.1, 1.0, 5.0}) CHECK(law->survival(s) == doctest::Approx(std::exp(-2.0 * s)).epsilon(1e-12));
    CHECK(moment(*law, 1.0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(law->mgf_abscissa() == 2.0);
  }
  SUBCASE("linear hazard integrates to a quadratic") {
    const LawPtr law = make_hazard_table({{0.0, 0.0}, {2.0, 2.0}});
    // Lambda(s) = s^2 / 2 on [0, 2], then 2 + 2 (s - 2).
    CHECK(law->survival(1.5) == doctest::Approx(std::exp(-1.125)).epsilon(1e-12));
    CHECK(law->survival(3.0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
  }
  SUBCASE("validation names the field") {
    try {
      make_hazard_table({{1.0, 1.0}, {0.5, 1.0}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "law.params.knots");
    }
    CHECK_THROWS_AS(make_hazard_table({{0.0, 1.0}, {1.0, 0.0}}), ConfigError);
  }
}

TEST_CASE("forward law") {
  SUBCASE("exponential is memoryless") {
    const auto w = forward_law(exp_law(1.0), 3.0);
    for (double s : {0.0, 0.5, 2.0}) CHECK(w->survival(s) == doctest::Approx(std::exp(-s)).epsilon(1e-13));
  }
  SUBCASE("forward density at zero is the hazard") {
    const LawPtr law = example_law(1.0, 2.0);
    for (double theta : {0.0, 0.4, 1.9, 5.0}) {
      CHECK(forward_law(law, theta)->pdf(0.0) == doctest::Approx(law->hazard(theta)).epsilon(1e-12));
    }
  }
  SUBCASE("survival is the ratio of base survivals") {
    const LawPtr law = example_law(1.0, 3.0);
    const auto w = forward_law(law, 0.8);
    for (double s : {0.2, 1.0, 4.0}) {
      CHECK(w->survival(s) == doctest::Approx(oracle::example_survival(1.0, 3.0, s + 0.8) /
                                              oracle::example_survival(1.0, 3.0, 0.8))
                                  .epsilon(1e-12));
    }
  }
}

TEST_CASE("stationary backward law") {
  SUBCASE("exponential is its own stationary law") {
    const auto st = stationary_backward(exp_law(1.0));
    for (double s : {0.0, 0.5, 3.0, 10.0}) CHECK(st->pdf(s) == doctest::Approx(std::exp(-s)).epsilon(1e-12));
    CHECK(st->survival(2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-10));
    CHECK(st->mean() == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("mean is E xi^2 / (2 E xi)") {
    for (double k : {2.0, 3.0}) {
      const LawPtr law = example_law(1.0, k);
      const auto st = stationary_backward(law);
      const double expect = oracle::example_moment(1.0, k, 2.0) / (2.0 * oracle::example_moment(1.0, k, 1.0));
      CHECK(st->mean() == doctest::Approx(expect).epsilon(1e-8));
      CHECK(st->cdf(st->tail_point()) > 1.0 - 1e-12);
    }
  }
}

TEST_CASE("sampling consumes one uniform per draw and is reproducible") {
  const LawPtr law = example_law(1.0, 2.0);
  UniformStream a(42);
  UniformStream b(42);
  for (int i = 0; i < 100; ++i) CHECK(sample(*law, a) == sample(*law, b));
  CHECK(a.draws() == 100);
  UniformStream c(42);
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(sample(*law, c));
  const double d = oracle::ks_one_sample(xs, [](double s) { return 1.0 - oracle::example_survival(1.0, 2.0, s); });
  CHECK(d < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("replica streams are distinct") {
  UniformStream a = UniformStream::for_replica(1, 0);
  UniformStream b = UniformStream::for_replica(1, 1);
  UniformStream c = UniformStream::for_replica(1, 0, 1);
  const double x = a.next();
  CHECK(x != b.next());
  CHECK(x != c.next());
  CHECK(x == UniformStream::for_replica(1, 0).next());
}

TEST_CASE("make_law") {
  CHECK(make_law({{"family", "exponential"}, {"params", {{"rate", 2.0}}}})->pdf(0.0) == 2.0);
  CHECK(make_law(example_law(1.0, 2.0)->spec())->survival(1.0) ==
        doctest::Approx(oracle::example_survival(1.0, 2.0, 1.0)));
  const auto field_of = [](const nlohmann::json& spec) {
    try {
      make_law(spec);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  CHECK(field_of({{"family", "weibull"}}) == "law.family");
  CHECK(field_of({{"params", {}}}) == "law.family");
  CHECK(field_of({{"family", "example"}, {"params", {{"C", 1.0}}}}) == "law.params.K");
  CHECK(field_of({{"family", "example"}, {"params", {{"C", -1.0}, {"K", 2.0}}}}) == "law.params.C");
  CHECK(field_of({{"family", "exponential"}, {"params", {{"rate", "fast"}}}}) == "law.params.rate");
}
