#include "bsa/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bsa/errors.hpp"
#include "bsa/transforms.hpp"

namespace bsa {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

void HyperParams::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0)) throw ConfigError(std::string("hyperparameter ") + name + " must be positive");
  };
  positive(nu, "nu");
  positive(a1, "a1");
  positive(a2, "a2");
  positive(a_beta, "a_beta");
  positive(b_beta, "b_beta");
  positive(a_rho, "a_rho");
  positive(b_rho, "b_rho");
  positive(alpha0, "alpha0");
  if (!(a2 > 1.0)) throw ConfigError("hyperparameter a2 must exceed 1 for increasing shrinkage");
}

Vec eta_from_delta(const Vec& delta) {
  Vec eta(delta.size());
  double acc = 1.0;
  for (Eigen::Index k = 0; k < delta.size(); ++k) {
    if (!(delta[k] > 0.0)) throw NumericError("eta_from_delta: delta must be positive");
    acc *= delta[k];
    eta[k] = acc;
  }
  return eta;
}

ParamLayout ParamLayout::make(const ModelDims& dims, GpParam gp) {
  ParamLayout l;
  l.dims = dims;
  l.gp = gp;
  int off = 0;
  l.off_lambda = off; off += dims.K * dims.M;
  l.off_phi = off;    off += dims.K * dims.M;
  l.off_delta = off;  off += dims.K;
  l.off_h = off;      off += dims.K * (dims.C - 1);
  l.off_beta = off;   off += dims.p * dims.K;
  l.off_m0 = off;     off += dims.p;
  l.off_s0 = off;     off += 1;
  l.off_w = off;      off += dims.K * dims.N;
  l.off_rho = off;    off += dims.K;
  l.off_sigma = off;  off += dims.C;
  l.size = off;
  return l;
}

namespace {

struct SourceCov {
  Mat cov;  // exp(-dist/rho), unit diagonal (before jitter)
  CholFactor chol;
};

// Covariances and Cholesky factors of the K spatial kernels at the current
// ranges.
std::vector<SourceCov> source_factors(const Mat& dist, const Vec& rho) {
  std::vector<SourceCov> out;
  out.reserve(static_cast<std::size_t>(rho.size()));
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    try {
      Mat cov = exp_cov(dist, rho[k]);
      CholFactor chol = chol_psd(cov);
      out.push_back(SourceCov{std::move(cov), std::move(chol)});
    } catch (const NumericError& e) {
      throw NumericError("spatial covariance for source " + std::to_string(k + 1) + ": " +
                         e.what());
    }
  }
  return out;
}

}  // namespace

ModelParams constrain(const Vec& v, const ParamLayout& layout, const Mat& dist) {
  if (!v.allFinite()) throw NumericError("constrain: non-finite unconstrained vector");
  const auto& d = layout.dims;
  ModelParams p;
  p.phi = Eigen::Map<const Mat>(v.data() + layout.off_phi, d.K, d.M).array().exp();
  p.delta = v.segment(layout.off_delta, d.K).array().exp();
  const Vec eta = eta_from_delta(p.delta);
  p.lambda = Eigen::Map<const Mat>(v.data() + layout.off_lambda, d.K, d.M).array() /
             (p.phi.array().colwise() * eta.array()).sqrt();
  p.H.resize(d.K, d.C);
  for (int k = 0; k < d.K; ++k) {
    p.H.row(k) = stick_to_simplex(v.segment(layout.off_h + k * (d.C - 1), d.C - 1)).transpose();
  }
  p.beta = Eigen::Map<const Mat>(v.data() + layout.off_beta, d.p, d.K);
  p.m0 = v.segment(layout.off_m0, d.p);
  p.s0 = std::exp(v[layout.off_s0]);
  p.rho = v.segment(layout.off_rho, d.K).array().exp();
  p.sigma = v.segment(layout.off_sigma, d.C).array().exp();
  const Eigen::Map<const Mat> wblk(v.data() + layout.off_w, d.K, d.N);
  if (layout.gp == GpParam::whitened) {
    const auto chols = source_factors(dist, p.rho);
    p.W.resize(d.K, d.N);
    for (int k = 0; k < d.K; ++k) {
      p.W.row(k) =
          (chols[static_cast<std::size_t>(k)].chol.lower.triangularView<Eigen::Lower>() *
           wblk.row(k).transpose())
              .transpose();
    }
  } else {
    p.W = wblk;
  }
  return p;
}

Vec unconstrain(const ModelParams& params, const ParamLayout& layout, const Mat& dist) {
  const auto& d = layout.dims;
  auto require = [](bool ok, const char* what) {
    if (!ok) throw NumericError(std::string("unconstrain: ") + what);
  };
  require(params.lambda.rows() == d.K && params.lambda.cols() == d.M, "Lambda shape mismatch");
  require((params.phi.array() > 0.0).all(), "phi must be positive");
  require((params.delta.array() > 0.0).all(), "delta must be positive");
  require((params.rho.array() > 0.0).all(), "rho must be positive");
  require((params.sigma.array() > 0.0).all(), "sigma must be positive");
  require(params.s0 > 0.0, "s0 must be positive");

  Vec v(layout.size);
  const Vec eta = eta_from_delta(params.delta);
  Eigen::Map<Mat>(v.data() + layout.off_lambda, d.K, d.M) =
      params.lambda.array() * (params.phi.array().colwise() * eta.array()).sqrt();
  Eigen::Map<Mat>(v.data() + layout.off_phi, d.K, d.M) = params.phi.array().log();
  v.segment(layout.off_delta, d.K) = params.delta.array().log();
  for (int k = 0; k < d.K; ++k) {
    v.segment(layout.off_h + k * (d.C - 1), d.C - 1) =
        simplex_from_stick_inverse(params.H.row(k).transpose());
  }
  Eigen::Map<Mat>(v.data() + layout.off_beta, d.p, d.K) = params.beta;
  v.segment(layout.off_m0, d.p) = params.m0;
  v[layout.off_s0] = std::log(params.s0);
  v.segment(layout.off_rho, d.K) = params.rho.array().log();
  v.segment(layout.off_sigma, d.C) = params.sigma.array().log();
  Eigen::Map<Mat> wblk(v.data() + layout.off_w, d.K, d.N);
  if (layout.gp == GpParam::whitened) {
    const auto chols = source_factors(dist, params.rho);
    for (int k = 0; k < d.K; ++k) {
      wblk.row(k) = chols[static_cast<std::size_t>(k)].chol
                        .lower.triangularView<Eigen::Lower>()
                        .solve(params.W.row(k).transpose())
                        .transpose();
    }
  } else {
    wblk = params.W;
  }
  if (!v.allFinite()) throw NumericError("unconstrain: parameters on the boundary");
  return v;
}

Vec mean_field(const ModelParams& params, const DataBundle& data, int site) {
  if (site < 0 || site >= data.n_sites()) throw DataError("mean_field: site index out of range");
  const auto& sd = data.site_data[static_cast<std::size_t>(site)];
  const int l = static_cast<int>(sd.times.size());
  const int K = static_cast<int>(params.lambda.rows());
  Vec gamma = (params.beta.transpose() * data.X.row(site).transpose() + params.W.col(site))
                  .array()
                  .exp();
  Mat mu = Mat::Zero(static_cast<int>(params.H.cols()), l);
  if (l > 0) {
    Mat f(K, l);
    for (int j = 0; j < l; ++j) {
      f.col(j) = params.lambda * data.B_grid.col(sd.grid_index[static_cast<std::size_t>(j)]);
    }
    mu = params.H.transpose() * (f.array().colwise() * gamma.array()).matrix();
  }
  return Eigen::Map<Vec>(mu.data(), mu.size());
}

namespace {

// Shared implementation: log posterior, optionally with its exact gradient.
double eval_posterior(const Vec& v, const DataBundle& data, const HyperParams& hyper,
                      const ParamLayout& layout, Vec* grad) {
  const auto& d = layout.dims;
  const int K = d.K, M = d.M, C = d.C, p = d.p, N = d.N;
  if (v.size() != layout.size) throw NumericError("log_posterior: dimension mismatch");

  if (grad) {
    grad->resize(layout.size);
    grad->setZero();
  }

  // --- unpack -------------------------------------------------------------
  const Eigen::Map<const Mat> lamt(v.data() + layout.off_lambda, K, M);  // whitened loadings
  const Eigen::Map<const Mat> vphi(v.data() + layout.off_phi, K, M);
  const Mat phi = vphi.array().exp();
  const Vec vdelta = v.segment(layout.off_delta, K);
  Vec leta(K);  // log eta_k = cumulative sums of log delta
  {
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      acc += vdelta[k];
      leta[k] = acc;
    }
  }
  const Vec delta = vdelta.array().exp();
  // lambda = lamt / sqrt(phi * eta)
  const Mat shrink_scale = (-0.5 * (vphi.array().colwise() + leta.array())).exp();
  const Mat lambda = lamt.array() * shrink_scale.array();

  double log_jac_h = 0.0;
  Mat H(K, C);
  for (int k = 0; k < K; ++k) {
    H.row(k) =
        stick_to_simplex(v.segment(layout.off_h + k * (C - 1), C - 1), &log_jac_h).transpose();
  }

  const Eigen::Map<const Mat> beta(v.data() + layout.off_beta, p, K);
  const Vec m0 = v.segment(layout.off_m0, p);
  const double vs0 = v[layout.off_s0];
  const double s0 = std::exp(vs0);
  const Vec vrho = v.segment(layout.off_rho, K);
  const Vec rho = vrho.array().exp();
  const Vec vsigma = v.segment(layout.off_sigma, C);
  const Vec sigma = vsigma.array().exp();
  const Vec inv_s2 = sigma.array().square().inverse();

  const Eigen::Map<const Mat> wblk(v.data() + layout.off_w, K, N);
  const bool whitened = layout.gp == GpParam::whitened;
  const auto chols = source_factors(data.dist, rho);
  Mat W(K, N);
  if (whitened) {
    for (int k = 0; k < K; ++k) {
      W.row(k) = (chols[static_cast<std::size_t>(k)].chol.lower.triangularView<Eigen::Lower>() *
                  wblk.row(k).transpose())
                     .transpose();
    }
  } else {
    W = wblk;
  }

  double lp = 0.0;

  // --- likelihood over observed cells --------------------------------------
  const int U = static_cast<int>(data.grid.size());
  const Mat F_grid = lambda * data.B_grid;                  // K x U
  const Mat Umat = (data.X * beta).transpose() + W;         // K x N
  const Mat E = Umat.array().exp();                         // gamma_k(s_i)

  Vec q = Vec::Zero(C);  // masked residual sum of squares per pollutant
  Mat dF_grid, dH_lik, dU;
  if (grad) {
    dF_grid = Mat::Zero(K, U);
    dH_lik = Mat::Zero(K, C);
    dU = Mat::Zero(K, N);
  }

  int l_max = 0;
  for (const auto& sd : data.site_data) l_max = std::max(l_max, static_cast<int>(sd.times.size()));
  Mat Fi(K, l_max), Gi(K, l_max), resid(C, l_max), R(C, l_max), dG(K, l_max), dFi(K, l_max);
  for (int i = 0; i < N; ++i) {
    const auto& sd = data.site_data[static_cast<std::size_t>(i)];
    const int l = static_cast<int>(sd.times.size());
    if (l == 0) continue;
    auto fi = Fi.leftCols(l);
    for (int j = 0; j < l; ++j) {
      fi.col(j) = F_grid.col(sd.grid_index[static_cast<std::size_t>(j)]);
    }
    auto gi = Gi.leftCols(l);
    gi = fi.array().colwise() * E.col(i).array();
    auto ri = resid.leftCols(l);
    ri = sd.y;
    ri.noalias() -= H.transpose() * gi;
    ri.array() *= sd.observed;
    q += ri.rowwise().squaredNorm();
    if (grad) {
      auto r = R.leftCols(l);
      r = ri.array().colwise() * inv_s2.array();  // C x l
      auto dg = dG.leftCols(l);
      dg.noalias() = H * r;  // K x l
      dH_lik.noalias() += gi * r.transpose();
      auto dfi = dFi.leftCols(l);
      dfi = dg.array().colwise() * E.col(i).array();
      for (int j = 0; j < l; ++j) {
        dF_grid.col(sd.grid_index[static_cast<std::size_t>(j)]) += dfi.col(j);
      }
      dU.col(i) = (dg.array() * fi.array()).rowwise().sum() * E.col(i).array();
    }
  }
  lp += -0.5 * (q.array() * inv_s2.array()).sum() -
        (data.n_obs_per_pollutant.array() * vsigma.array()).sum() -
        0.5 * static_cast<double>(data.n_obs) * kLog2Pi;

  // --- loadings (whitened) and the MGPS locals --------------------------------
  lp += -0.5 * lamt.squaredNorm() - 0.5 * K * M * kLog2Pi;
  const double half_nu = 0.5 * hyper.nu;
  lp += K * M * (half_nu * std::log(half_nu) - std::lgamma(half_nu)) +
        half_nu * vphi.sum() - half_nu * phi.sum();
  for (int k = 0; k < K; ++k) {
    const double a = k == 0 ? hyper.a1 : hyper.a2;
    lp += a * vdelta[k] - delta[k] - std::lgamma(a);
  }

  // --- H rows ---------------------------------------------------------------
  lp += K * (std::lgamma(C * hyper.alpha0) - C * std::lgamma(hyper.alpha0));
  if (hyper.alpha0 != 1.0) {
    lp += (hyper.alpha0 - 1.0) * H.array().log().sum();
  }
  lp += log_jac_h;

  // --- beta | m0, s0 and their priors ---------------------------------------
  const Mat bc = beta.colwise() - m0;
  const double ss_beta = bc.squaredNorm();
  lp += -0.5 * ss_beta / s0 - 0.5 * p * K * (kLog2Pi + vs0);
  lp += -0.5 * m0.squaredNorm() - 0.5 * p * kLog2Pi;
  lp += hyper.a_beta * std::log(hyper.b_beta) - std::lgamma(hyper.a_beta) -
        hyper.a_beta * vs0 - hyper.b_beta / s0;

  // --- spatial effects and ranges -------------------------------------------
  lp += -0.5 * K * N * kLog2Pi;
  for (int k = 0; k < K; ++k) {
    const auto& L = chols[static_cast<std::size_t>(k)].chol.lower;
    if (whitened) {
      lp += -0.5 * wblk.row(k).squaredNorm();
    } else {
      const Vec alpha = L.triangularView<Eigen::Lower>().transpose().solve(
          L.triangularView<Eigen::Lower>().solve(W.row(k).transpose()));
      lp += -0.5 * W.row(k).dot(alpha) - L.diagonal().array().log().sum();
    }
    lp += hyper.a_rho * std::log(hyper.b_rho) - std::lgamma(hyper.a_rho) -
          hyper.a_rho * vrho[k] - hyper.b_rho / rho[k];
  }

  // --- noise scales ----------------------------------------------------------
  constexpr double log_2_over_pi = 0.46209812037329687;  // log(2/pi)
  for (int c = 0; c < C; ++c) {
    lp += log_2_over_pi - std::log1p(sigma[c] * sigma[c]) + vsigma[c];
  }

  if (!grad) return lp;

  // === gradient ===============================================================
  auto& g = *grad;

  // natural-scale likelihood pullback onto the loadings
  const Mat dLam_lik = dF_grid * data.B_grid.transpose();

  // whitened loadings: chain through lambda = lamt * scale, standard prior
  Eigen::Map<Mat>(g.data() + layout.off_lambda, K, M) =
      (dLam_lik.array() * shrink_scale.array() - lamt.array()).matrix();

  // log phi: d lambda / d log phi = -lambda/2, plus the Gamma prior
  Eigen::Map<Mat>(g.data() + layout.off_phi, K, M) =
      (-0.5 * dLam_lik.array() * lambda.array() + half_nu - half_nu * phi.array()).matrix();

  // log delta: suffix sums of the per-source log-eta sensitivities
  // (d lambda / d log eta = -lambda/2).
  {
    Vec dleta(K);
    for (int k = 0; k < K; ++k) {
      dleta[k] = -0.5 * (dLam_lik.row(k).array() * lambda.row(k).array()).sum();
    }
    double suffix = 0.0;
    for (int k = K - 1; k >= 0; --k) {
      suffix += dleta[k];
      const double a = k == 0 ? hyper.a1 : hyper.a2;
      g[layout.off_delta + k] = suffix + a - delta[k];
    }
  }

  // H sticks
  for (int k = 0; k < K; ++k) {
    Vec grad_h = dH_lik.row(k).transpose();
    if (hyper.alpha0 != 1.0) {
      grad_h.array() += (hyper.alpha0 - 1.0) / H.row(k).transpose().array();
    }
    g.segment(layout.off_h + k * (C - 1), C - 1) =
        stick_gradient(v.segment(layout.off_h + k * (C - 1), C - 1), grad_h);
  }

  // beta, m0, log s0
  Eigen::Map<Mat>(g.data() + layout.off_beta, p, K) =
      data.X.transpose() * dU.transpose() - bc / s0;
  g.segment(layout.off_m0, p) = bc.rowwise().sum() / s0 - m0;
  g[layout.off_s0] = -0.5 * p * K + 0.5 * ss_beta / s0 - hyper.a_beta + hyper.b_beta / s0;

  // W (or z) and log rho
  Eigen::Map<Mat> gw(g.data() + layout.off_w, K, N);
  for (int k = 0; k < K; ++k) {
    const auto& L = chols[static_cast<std::size_t>(k)].chol.lower;
    // dSigma/drho = Sigma .* dist / rho^2 (zero diagonal, jitter constant)
    const Mat dSig =
        (chols[static_cast<std::size_t>(k)].cov.array() * data.dist.array() / (rho[k] * rho[k]))
            .matrix();
    double drho_nat;
    if (whitened) {
      const Vec u = L.triangularView<Eigen::Lower>().transpose() * dU.row(k).transpose();
      gw.row(k) = u.transpose() - wblk.row(k);
      // dL = L Phi(L^{-1} dSig L^{-T}); directional derivative against z
      Mat A = L.triangularView<Eigen::Lower>().solve(dSig);
      Mat Pt = L.triangularView<Eigen::Lower>().solve(A.transpose());
      Pt.diagonal() *= 0.5;
      const Vec t = Pt.triangularView<Eigen::Lower>() * wblk.row(k).transpose();
      drho_nat = u.dot(t);
    } else {
      const Vec alpha = L.triangularView<Eigen::Lower>().transpose().solve(
          L.triangularView<Eigen::Lower>().solve(W.row(k).transpose()));
      gw.row(k) = dU.row(k) - alpha.transpose();
      Mat A = L.triangularView<Eigen::Lower>().solve(dSig);
      const Mat Pt = L.triangularView<Eigen::Lower>().solve(A.transpose());
      drho_nat = 0.5 * alpha.dot(dSig * alpha) - 0.5 * Pt.trace();
    }
    g[layout.off_rho + k] = rho[k] * drho_nat - hyper.a_rho + hyper.b_rho / rho[k];
  }

  // log sigma
  for (int c = 0; c < C; ++c) {
    const double s2 = sigma[c] * sigma[c];
    g[layout.off_sigma + c] = -data.n_obs_per_pollutant[c] + q[c] * inv_s2[c] -
                              2.0 * s2 / (1.0 + s2) + 1.0;
  }

  return lp;
}

}  // namespace

double log_posterior(const Vec& v, const DataBundle& data, const HyperParams& hyper,
                     const ParamLayout& layout) {
  return eval_posterior(v, data, hyper, layout, nullptr);
}

double log_posterior_grad(const Vec& v, const DataBundle& data, const HyperParams& hyper,
                          const ParamLayout& layout, Vec& grad) {
  return eval_posterior(v, data, hyper, layout, &grad);
}

Vec grad_log_posterior(const Vec& v, const DataBundle& data, const HyperParams& hyper,
                       const ParamLayout& layout) {
  Vec g;
  eval_posterior(v, data, hyper, layout, &g);
  return g;
}

}  // namespace bsa
