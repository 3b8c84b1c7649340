#include <doctest.h>

#include <random>
#include <vector>

#include "bsa/basis.hpp"
#include "bsa/errors.hpp"

using namespace bsa;

namespace {

// Independent oracle: textbook Cox-de Boor recursion evaluated naively from
// the definition, with the 0/0 := 0 convention. Kept separate from the
// production evaluator on purpose.
double cox_de_boor(const std::vector<double>& u, int i, int p, double t) {
  if (p == 0) {
    const bool last = u[static_cast<std::size_t>(i + 1)] == u.back() &&
                      t == u.back();  // right-closed last span
    return (t >= u[static_cast<std::size_t>(i)] && t < u[static_cast<std::size_t>(i + 1)]) || last
               ? 1.0
               : 0.0;
  }
  double left = 0.0, right = 0.0;
  const double dl = u[static_cast<std::size_t>(i + p)] - u[static_cast<std::size_t>(i)];
  if (dl > 0.0) left = (t - u[static_cast<std::size_t>(i)]) / dl * cox_de_boor(u, i, p - 1, t);
  const double dr = u[static_cast<std::size_t>(i + p + 1)] - u[static_cast<std::size_t>(i + 1)];
  if (dr > 0.0) {
    right = (u[static_cast<std::size_t>(i + p + 1)] - t) / dr * cox_de_boor(u, i + 1, p - 1, t);
  }
  return left + right;
}

Vec oracle_basis(const KnotVector& kv, double t) {
  Vec out(kv.num_basis);
  for (int i = 0; i < kv.num_basis; ++i) out[i] = cox_de_boor(kv.knots, i, kv.degree, t);
  return out;
}

}  // namespace

TEST_CASE("build_knots produces a clamped uniform cubic vector") {
  const KnotVector kv = build_knots(1, 365, 15);
  CHECK(kv.degree == 3);
  CHECK(kv.num_basis == 15);
  CHECK(kv.knots.size() == 19);
  // 11 uniform interior knots, boundary repeated 4x
  for (int i = 0; i < 4; ++i) {
    CHECK(kv.knots[static_cast<std::size_t>(i)] == 1.0);
    CHECK(kv.knots[kv.knots.size() - 1 - static_cast<std::size_t>(i)] == 365.0);
  }
  const double step = 364.0 / 12.0;
  for (int i = 1; i <= 11; ++i) {
    CHECK(kv.knots[static_cast<std::size_t>(3 + i)] == doctest::Approx(1.0 + i * step));
  }
  for (std::size_t i = 1; i < kv.knots.size(); ++i) CHECK(kv.knots[i] >= kv.knots[i - 1]);
}

TEST_CASE("build_knots degenerate and error cases") {
  const KnotVector bernstein = build_knots(0, 1, 4);
  CHECK(bernstein.knots.size() == 8);  // no interior knots
  // Bernstein cubic basis at 1/2: (1/8, 3/8, 3/8, 1/8)
  const Vec b = eval_basis(bernstein, 0.5);
  CHECK(b[0] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(b[2] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(b[3] == doctest::Approx(0.125).epsilon(1e-12));

  CHECK_THROWS_AS(build_knots(1, 365, 3), ConfigError);
  CHECK_THROWS_AS(build_knots(1, 1, 8), ConfigError);
}

TEST_CASE("eval_basis endpoints and domain") {
  const KnotVector kv = build_knots(1, 365, 15);
  const Vec left = eval_basis(kv, 1.0);
  CHECK(left[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(left.tail(14).cwiseAbs().maxCoeff() == 0.0);
  const Vec right = eval_basis(kv, 365.0);
  CHECK(right[14] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(right.head(14).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(eval_basis(kv, 0.999), DataError);
  CHECK_THROWS_AS(eval_basis(kv, 365.001), DataError);
}

TEST_CASE("partition of unity, bounds and local support") {
  const KnotVector kv = build_knots(1, 365, 15);
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> unif(1.0, 365.0);
  for (int rep = 0; rep < 500; ++rep) {
    const double t = unif(rng);
    const Vec b = eval_basis(kv, t);
    CHECK(b.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.minCoeff() >= 0.0);
    CHECK(b.maxCoeff() <= 1.0);
    CHECK((b.array() != 0.0).count() <= 4);
  }
}

TEST_CASE("agreement with the recursion oracle on random (knots, t) pairs") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> m_dist(4, 25);
  std::uniform_real_distribution<double> lo_dist(-5.0, 5.0);
  std::uniform_real_distribution<double> len_dist(0.5, 400.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const int m = m_dist(rng);
    const double lo = lo_dist(rng);
    const KnotVector kv = build_knots(lo, lo + len_dist(rng), m);
    std::uniform_real_distribution<double> t_dist(kv.t_min, kv.t_max);
    const double t = t_dist(rng);
    const Vec got = eval_basis(kv, t);
    const Vec want = oracle_basis(kv, t);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("basis_matrix columns match eval_basis") {
  const KnotVector kv = build_knots(1, 365, 15);

  SUBCASE("clamped endpoint columns") {
    const BasisMatrix bm = basis_matrix(kv, {1.0, 365.0});
    CHECK(bm.values.rows() == 15);
    CHECK(bm.values.cols() == 2);
    CHECK(bm.values(0, 0) == doctest::Approx(1.0));
    CHECK(bm.values(14, 1) == doctest::Approx(1.0));
  }

  SUBCASE("empty schedule") {
    const BasisMatrix bm = basis_matrix(kv, {});
    CHECK(bm.values.rows() == 15);
    CHECK(bm.values.cols() == 0);
  }

  SUBCASE("1-in-3 schedule columns each sum to one") {
    std::vector<double> days;
    for (double t = 1.0; t <= 365.0; t += 3.0) days.push_back(t);
    CHECK(days.size() == 122);
    const BasisMatrix bm = basis_matrix(kv, days);
    for (Eigen::Index j = 0; j < bm.values.cols(); ++j) {
      CHECK(bm.values.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("domain error propagates") {
    CHECK_THROWS_AS(basis_matrix(kv, {1.0, 400.0}), DataError);
  }
}
