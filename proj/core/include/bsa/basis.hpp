#pragma once

#include <vector>

#include "bsa/types.hpp"

namespace bsa {

/// Clamped cubic B-spline basis on [t_min, t_max]. The knot vector repeats
/// each boundary knot degree+1 times, so the basis interpolates the
/// endpoints and sums to one everywhere on the domain.
struct KnotVector {
  int degree = 3;
  double t_min = 0.0;
  double t_max = 1.0;
  int num_basis = 0;          ///< M
  std::vector<double> knots;  ///< full clamped vector, size M + degree + 1
};

/// M x L matrix of basis values; column j is the basis evaluated at times[j].
struct BasisMatrix {
  Mat values;
};

/// Clamped cubic knot vector with M - 4 uniformly spaced interior knots.
/// Throws ConfigError if num_basis < 4 or t_max <= t_min.
KnotVector build_knots(double t_min, double t_max, int num_basis);

/// All M basis functions at t (at most 4 nonzero). Throws DataError when t
/// is outside [t_min, t_max].
Vec eval_basis(const KnotVector& kv, double t);

BasisMatrix basis_matrix(const KnotVector& kv, const std::vector<double>& times);

}  // namespace bsa
