#pragma once

#include <string>
#include <vector>

#include "bsa/data.hpp"
#include "bsa/types.hpp"

namespace bsa {

/// Fixed prior constants. Defaults follow the fit configuration used
/// throughout: nu=3, a1=10, a2=20 for the shrinkage prior, InvGamma(3, 1000)
/// on the spatial ranges (prior mean 500 km), Dirichlet(1) on contributions.
struct HyperParams {
  double nu = 3.0;
  double a1 = 10.0;
  double a2 = 20.0;
  double a_beta = 3.0;
  double b_beta = 2.0;
  double a_rho = 3.0;
  double b_rho = 1000.0;
  double alpha0 = 1.0;
  double sigma2_spatial = 1.0;  // fixed at 1 for identifiability, never sampled

  /// All strictly positive and a2 > 1 (shrinkage must increase with source
  /// index). Throws ConfigError otherwise.
  void validate() const;
};

struct ModelDims {
  int K = 0;  // sources
  int M = 0;  // basis functions
  int C = 0;  // pollutants
  int p = 0;  // covariates
  int N = 0;  // sites
};

/// All latent quantities on their natural (constrained) scale.
struct ModelParams {
  Mat lambda;  // K x M basis coefficients
  Mat phi;     // K x M local shrinkage, positive
  Vec delta;   // K multiplicative increments, positive
  Mat H;       // K x C contributions, rows on the simplex
  Mat beta;    // p x K regression coefficients
  Vec m0;      // p
  double s0 = 1.0;
  Mat W;       // K x N spatial effects (natural coordinates)
  Vec rho;     // K ranges, km
  Vec sigma;   // C noise standard deviations
};

/// eta_k = prod_{l<=k} delta_l. Throws NumericError on nonpositive input.
Vec eta_from_delta(const Vec& delta);

enum class GpParam { whitened, centered };

/// Packing of the unconstrained vector, in order: Lambda, log phi, log delta,
/// stick-breaking rows of H, beta, m0, log s0, W (or its whitened coordinates
/// z with W = L(rho) z), log rho, log sigma. Within a block, matrices are
/// packed column-major. The Lambda slot holds the whitened coordinates
/// lambda_{k,m} * sqrt(phi_{k,m} eta_k), which are a priori standard normal;
/// sampling the loadings jointly with their shrinkage scales is otherwise a
/// funnel no fixed metric can handle.
struct ParamLayout {
  ModelDims dims;
  GpParam gp = GpParam::whitened;
  int off_lambda = 0, off_phi = 0, off_delta = 0, off_h = 0, off_beta = 0;
  int off_m0 = 0, off_s0 = 0, off_w = 0, off_rho = 0, off_sigma = 0;
  int size = 0;

  static ParamLayout make(const ModelDims& dims, GpParam gp = GpParam::whitened);
};

/// Unconstrained -> constrained. Needs the site distances to reconstruct W
/// in whitened mode. Throws NumericError on non-finite input.
ModelParams constrain(const Vec& v, const ParamLayout& layout, const Mat& dist);

/// Constrained -> unconstrained (bijective on the interior; boundary rows of
/// H are rejected). Throws NumericError on boundary or nonpositive values.
Vec unconstrain(const ModelParams& params, const ParamLayout& layout, const Mat& dist);

/// Model mean for one site, length C * l_i, pollutants fastest within day.
Vec mean_field(const ModelParams& params, const DataBundle& data, int site);

/// Joint log posterior on the unconstrained scale (likelihood over observed
/// cells, all priors, transform Jacobians). Throws NumericError when a
/// spatial covariance cannot be factorized at the proposed range.
double log_posterior(const Vec& v, const DataBundle& data, const HyperParams& hyper,
                     const ParamLayout& layout);

/// As log_posterior but also fills the exact gradient.
double log_posterior_grad(const Vec& v, const DataBundle& data, const HyperParams& hyper,
                          const ParamLayout& layout, Vec& grad);

Vec grad_log_posterior(const Vec& v, const DataBundle& data, const HyperParams& hyper,
                       const ParamLayout& layout);

}  // namespace bsa
