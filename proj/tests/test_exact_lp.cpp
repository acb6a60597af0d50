#include "sevot/exact_lp.hpp"
#include "sevot/labels.hpp"
#include "sevot/wasserstein.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace sevot;
using sevot::testing::Rng;

namespace {

void check_plan(const LossResult<double>& r, const ProbabilityHistogram<double>& s,
                const ProbabilityHistogram<double>& t, const GroundMatrix<double>& d) {
  REQUIRE(r.plan);
  const auto& w = r.plan->flows();
  CHECK(w.minCoeff() >= 0.0);
  CHECK((r.plan->row_sums() - s.values()).maxCoeff() <= 1e-8);
  CHECK((r.plan->col_sums() - t.values()).maxCoeff() <= 1e-8);
  CHECK(std::abs(r.plan->mass() - 1.0) <= 1e-6);
  CHECK(std::abs(r.plan->cost(d) - r.loss) <= 1e-9);
  CHECK(r.loss >= 0.0);
}

}  // namespace

TEST_CASE("identical histograms cost nothing and move along the diagonal") {
  Rng rng(31);
  const auto d = sevot::testing::random_matrix(rng, 5);
  const auto s = sevot::testing::random_histogram(rng, 5);
  const auto r = exact_lp_loss(s, s, d);
  CHECK(std::abs(r.loss) <= 1e-12);
  REQUIRE(r.plan);
  CHECK((Matrix<double>(r.plan->flows().diagonal().asDiagonal()) - r.plan->flows())
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  check_plan(r, s, s, d);
}

TEST_CASE("single route example") {
  const GroundMatrix<double> d((Matrix<double>(2, 2) << 0, 3, 5, 0).finished());
  const auto r = exact_lp_loss(ProbabilityHistogram<double>{1.0, 0.0},
                               ProbabilityHistogram<double>{0.0, 1.0}, d);
  CHECK(r.loss == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(r.plan->flows()(0, 1) == doctest::Approx(1.0));
  // The opposite direction uses the other cell of an asymmetric matrix.
  CHECK(exact_lp_loss(ProbabilityHistogram<double>{0.0, 1.0},
                      ProbabilityHistogram<double>{1.0, 0.0}, d)
            .loss == doctest::Approx(5.0));
}

TEST_CASE("simplex matches brute-force vertex enumeration") {
  Rng rng(32);
  for (int k = 0; k < 150; ++k) {
    const Index n = 2 + static_cast<Index>(rng() % 3);
    const auto d = sevot::testing::random_matrix(rng, n, 0.0, 5.0, 0.15);
    const auto s = sevot::testing::random_histogram(rng, n, k % 3 == 0);
    const auto t = sevot::testing::random_histogram(rng, n, k % 4 == 0);
    const double oracle = sevot::testing::brute_force_transport(s.values(), t.values(),
                                                                d.entries());
    const auto r = exact_lp_loss(s, t, d);
    CHECK(std::abs(r.loss - oracle) <= 1e-9);
    check_plan(r, s, t, d);
  }
}

TEST_CASE("rectangular transport against brute force") {
  Rng rng(33);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    const Vector<double> a = sevot::testing::random_histogram(rng, 3, k % 2 == 0).values();
    const Vector<double> b = sevot::testing::random_histogram(rng, 4, k % 3 == 0).values();
    Matrix<double> c(3, 4);
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 4; ++j) c(i, j) = u(rng);
    }
    const Matrix<double> w = solve_transport(a, b, c);
    CHECK(std::abs((w.array() * c.array()).sum() -
                   sevot::testing::brute_force_transport(a, b, c)) <= 1e-9);
    CHECK((w.rowwise().sum() - a).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((w.colwise().sum().transpose() - b).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("plan invariants on larger random instances") {
  Rng rng(34);
  for (int k = 0; k < 30; ++k) {
    const Index n = 8 + static_cast<Index>(rng() % 57);
    const auto d = sevot::testing::random_matrix(rng, n, 0.0, 2.0, 0.05);
    const auto s = sevot::testing::random_histogram(rng, n, k % 2 == 0);
    const auto t = sevot::testing::random_histogram(rng, n);
    const auto r = exact_lp_loss(s, t, d);
    check_plan(r, s, t, d);
    // Optimum is no worse than the independent (product) coupling.
    const double product = (s.values() * t.values().transpose()).cwiseProduct(d.entries()).sum();
    CHECK(r.loss <= product + 1e-12);
  }
}

TEST_CASE("degenerate instances with many ties terminate") {
  // Uniform histograms and integer costs produce heavy degeneracy.
  for (Index n : {4, 10, 32, 64}) {
    Matrix<double> c(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) c(i, j) = static_cast<double>(std::abs(i - j) % 3);
    }
    c.diagonal().setZero();
    const GroundMatrix<double> d(c);
    const auto u = ProbabilityHistogram<double>::uniform(n);
    const auto r = exact_lp_loss(u, u, d);
    CHECK(std::abs(r.loss) <= 1e-12);
    const auto dirac = ProbabilityHistogram<double>::dirac(n, n / 2);
    CHECK(std::abs(exact_lp_loss(u, dirac, d).loss - onehot_loss_value(u, n / 2, d)) <= 1e-12);
  }
}

TEST_CASE("step metric reduces the LP to half l1") {
  Rng rng(35);
  for (int k = 0; k < 100; ++k) {
    const Index n = 2 + static_cast<Index>(rng() % 10);
    const auto d = apply_metric_fn(sevot::testing::random_matrix(rng, n, 0.2, 9.0),
                                   MetricFn::step());
    const auto s = sevot::testing::random_histogram(rng, n, k % 2 == 0);
    const auto t = sevot::testing::random_histogram(rng, n, k % 3 == 0);
    CHECK(std::abs(exact_lp_loss(s, t, d).loss - l1_loss(s, t).loss) <= 1e-9);
  }
}

TEST_CASE("zero smoothing matches the one-hot closed form") {
  Rng rng(36);
  for (int k = 0; k < 50; ++k) {
    const Index n = 2 + static_cast<Index>(rng() % 7);
    const auto d = sevot::testing::random_matrix(rng, n);
    const auto s = sevot::testing::random_histogram(rng, n);
    const OneHotTarget target(n, static_cast<Index>(rng() % static_cast<std::uint64_t>(n)));
    const auto t = smooth_onehot(target, 0.0).histogram();
    CHECK(std::abs(onehot_loss_value(s, target.j_star(), d) - exact_lp_loss(s, t, d).loss) <=
          1e-9);
  }
}

TEST_CASE("LP loss is continuous in the smoothing weight") {
  Rng rng(37);
  const Index n = 6;
  const double step = 0.01;
  for (int k = 0; k < 10; ++k) {
    const auto d = sevot::testing::random_matrix(rng, n);
    const auto s = sevot::testing::random_histogram(rng, n);
    const OneHotTarget target(n, k % n);
    const double max_d = d.entries().maxCoeff();
    double previous = exact_lp_loss(s, smooth_onehot(target, 0.0).histogram(), d).loss;
    for (double alpha = step; alpha < 0.995; alpha += step) {
      const double current = exact_lp_loss(s, smooth_onehot(target, alpha).histogram(), d).loss;
      CHECK(std::abs(current - previous) < 10.0 * step * max_d);
      previous = current;
    }
  }
}

TEST_CASE("size limits and mismatches") {
  const auto big = ProbabilityHistogram<double>::uniform(kExactLpMaxClasses + 1);
  CHECK_THROWS_AS(exact_lp_loss(big, big, zero_one_matrix<double>(kExactLpMaxClasses + 1)),
                  SizeError);
  const auto s = ProbabilityHistogram<double>::uniform(3);
  CHECK_THROWS_AS(exact_lp_loss(s, ProbabilityHistogram<double>::uniform(2),
                                zero_one_matrix<double>(3)),
                  SizeError);
  CHECK_THROWS_AS(exact_lp_loss(s, s, zero_one_matrix<double>(4)), SizeError);
}

TEST_CASE("float instantiation") {
  const GroundMatrix<float> d = zero_one_matrix<float>(3);
  const ProbabilityHistogram<float> s{0.5f, 0.5f, 0.0f};
  const ProbabilityHistogram<float> t{0.0f, 0.5f, 0.5f};
  CHECK(exact_lp_loss(s, t, d).loss == doctest::Approx(0.5f));
}
