#include "bsa/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "bsa/errors.hpp"

namespace bsa {

KnotVector build_knots(double t_min, double t_max, int num_basis) {
  if (num_basis < 4) {
    throw ConfigError("invalid basis: need at least 4 cubic basis functions, got " +
                      std::to_string(num_basis));
  }
  if (!(t_max > t_min)) {
    throw ConfigError("invalid basis: t_max must exceed t_min");
  }
  KnotVector kv;
  kv.degree = 3;
  kv.t_min = t_min;
  kv.t_max = t_max;
  kv.num_basis = num_basis;
  kv.knots.reserve(static_cast<std::size_t>(num_basis) + 4);
  const int n_interior = num_basis - 4;
  for (int i = 0; i < 4; ++i) kv.knots.push_back(t_min);
  for (int i = 1; i <= n_interior; ++i) {
    kv.knots.push_back(t_min + (t_max - t_min) * static_cast<double>(i) /
                                   static_cast<double>(n_interior + 1));
  }
  for (int i = 0; i < 4; ++i) kv.knots.push_back(t_max);
  return kv;
}

namespace {

// Index k with knots[k] <= t < knots[k+1], clamped so the last span is used
// at t == t_max.
int find_span(const KnotVector& kv, double t) {
  const int p = kv.degree;
  const int last = kv.num_basis - 1;  // last valid span start
  if (t >= kv.t_max) return last;
  auto it = std::upper_bound(kv.knots.begin() + p, kv.knots.begin() + last + 1, t);
  return static_cast<int>(it - kv.knots.begin()) - 1;
}

}  // namespace

Vec eval_basis(const KnotVector& kv, double t) {
  if (t < kv.t_min || t > kv.t_max) {
    throw DataError("basis evaluation outside domain: t=" + std::to_string(t));
  }
  const int p = kv.degree;
  const int span = find_span(kv, t);
  // Cox-de Boor triangular recurrence over the p+1 nonzero functions.
  std::array<double, 4> vals{};
  std::array<double, 4> left{};
  std::array<double, 4> right{};
  vals[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - kv.knots[static_cast<std::size_t>(span + 1 - j)];
    right[j] = kv.knots[static_cast<std::size_t>(span + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double tmp = vals[static_cast<std::size_t>(r)] / denom;
      vals[static_cast<std::size_t>(r)] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    vals[static_cast<std::size_t>(j)] = saved;
  }
  Vec out = Vec::Zero(kv.num_basis);
  for (int i = 0; i <= p; ++i) out[span - p + i] = vals[static_cast<std::size_t>(i)];
  return out;
}

BasisMatrix basis_matrix(const KnotVector& kv, const std::vector<double>& times) {
  BasisMatrix bm;
  bm.values.resize(kv.num_basis, static_cast<Eigen::Index>(times.size()));
  for (Eigen::Index j = 0; j < bm.values.cols(); ++j) {
    bm.values.col(j) = eval_basis(kv, times[static_cast<std::size_t>(j)]);
  }
  return bm;
}

}  // namespace bsa
