#include "bsa/transforms.hpp"

#include <cmath>

#include "bsa/errors.hpp"

namespace bsa {

namespace {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(a)) without overflow
inline double log1p_exp(double a) {
  if (a > 0.0) return a + std::log1p(std::exp(-a));
  return std::log1p(std::exp(a));
}

}  // namespace

Vec stick_to_simplex(const Vec& v, double* log_jac) {
  const int c_dim = static_cast<int>(v.size()) + 1;
  Vec h(c_dim);
  double stick = 1.0;
  for (int c = 0; c < c_dim - 1; ++c) {
    const double offset = -std::log(static_cast<double>(c_dim - 1 - c));
    const double x = v[c] + offset;
    const double z = sigmoid(x);
    h[c] = stick * z;
    if (log_jac) {
      // log z + log(1-z) + log stick, all in one pass
      *log_jac += -log1p_exp(-x) - log1p_exp(x) + std::log(stick);
    }
    stick -= h[c];
  }
  h[c_dim - 1] = stick;
  return h;
}

Vec simplex_from_stick_inverse(const Vec& h) {
  const int c_dim = static_cast<int>(h.size());
  Vec v(c_dim - 1);
  double stick = 1.0;
  for (int c = 0; c < c_dim - 1; ++c) {
    if (!(h[c] > 0.0) || !(stick > h[c])) {
      throw NumericError("simplex point on the boundary has no stick-breaking preimage");
    }
    const double z = h[c] / stick;
    v[c] = std::log(z / (1.0 - z)) + std::log(static_cast<double>(c_dim - 1 - c));
    stick -= h[c];
  }
  if (!(h[c_dim - 1] > 0.0)) {
    throw NumericError("simplex point on the boundary has no stick-breaking preimage");
  }
  return v;
}

Vec stick_gradient(const Vec& v, const Vec& grad_h) {
  const int c_dim = static_cast<int>(v.size()) + 1;
  Vec h(c_dim), z(c_dim - 1), s(c_dim - 1);
  double stick = 1.0;
  for (int c = 0; c < c_dim - 1; ++c) {
    const double x = v[c] - std::log(static_cast<double>(c_dim - 1 - c));
    z[c] = sigmoid(x);
    s[c] = stick;
    h[c] = stick * z[c];
    stick -= h[c];
  }
  h[c_dim - 1] = stick;

  // tail[j] = sum_{c > j} grad_h[c] * h[c]
  Vec grad(c_dim - 1);
  double tail = grad_h[c_dim - 1] * h[c_dim - 1];
  for (int j = c_dim - 2; j >= 0; --j) {
    grad[j] = (1.0 - z[j]) * grad_h[j] * h[j]   // own-coordinate term
              - z[j] * tail                     // downstream sticks shrink
              + (1.0 - z[j])                    // d log z / dv
              - static_cast<double>(c_dim - 1 - j) * z[j];  // d (C-j) log(1-z) / dv
    tail += grad_h[j] * h[j];
  }
  return grad;
}

}  // namespace bsa
