#pragma once

#include "bsa/types.hpp"

namespace bsa {

/// Stick-breaking map between R^{C-1} and the interior of the C-simplex.
/// The zero vector maps to the uniform point (1/C, ..., 1/C).

/// v (length C-1) -> simplex point h (length C). Adds the transform's
/// log-Jacobian to *log_jac when given.
Vec stick_to_simplex(const Vec& v, double* log_jac = nullptr);

/// Inverse map; throws NumericError on boundary points (any h_c <= 0 or a
/// leading partial sum reaching 1).
Vec simplex_from_stick_inverse(const Vec& h);

/// Gradient in v of [sum_c grad_h[c] * h_c(v) + log_jacobian(v)] for the
/// stick-breaking map; grad_h is the partial of everything else w.r.t. h.
Vec stick_gradient(const Vec& v, const Vec& grad_h);

}  // namespace bsa
