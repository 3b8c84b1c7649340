#include "bsa/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "bsa/errors.hpp"
#include "bsa/posterior.hpp"
#include "bsa/rng.hpp"

namespace bsa {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}
}  // namespace

double ModelTarget::value_grad(const Vec& x, Vec& grad) const {
  try {
    return log_posterior_grad(x, *data, *hyper, layout, grad);
  } catch (const NumericError&) {
    grad = Vec::Zero(layout.size);
    return kNegInf;
  }
}

void SamplerConfig::validate() const {
  if (burn_in >= n_iter) throw ConfigError("burn_in must be smaller than n_iter");
  if (burn_in < 100) throw ConfigError("burn_in must be at least 100");
  if (batch_size < 100) throw ConfigError("batch_size must be at least 100");
  if (k_init < 1) throw ConfigError("k_init must be at least 1");
  if (!(zeta > 0.0)) throw ConfigError("zeta must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw ConfigError("target_accept must lie in (0, 1)");
  }
  if (max_tree_depth < 1 || max_tree_depth > 14) {
    throw ConfigError("max_tree_depth must lie in 1..14");
  }
  if (n_chains < 1) throw ConfigError("n_chains must be at least 1");
  if (!nuts && hmc_steps < 1) throw ConfigError("hmc_steps must be at least 1");
}

namespace {

struct PhasePoint {
  Vec x;
  Vec p;
  Vec grad;
  double logp = kNegInf;
};

double kinetic(const Vec& p, const Vec& inv_mass) {
  return 0.5 * (p.array().square() * inv_mass.array()).sum();
}

// One leapfrog step; on a non-finite density the point is left with
// logp = -inf and the caller records a divergence.
void leapfrog(PhasePoint& z, double eps, const Vec& inv_mass, const LogDensity& target) {
  z.p += 0.5 * eps * z.grad;
  z.x.array() += eps * inv_mass.array() * z.p.array();
  z.logp = target.value_grad(z.x, z.grad);
  if (std::isfinite(z.logp)) {
    z.p += 0.5 * eps * z.grad;
  } else {
    z.logp = kNegInf;
  }
}

bool uturn(const PhasePoint& rear, const PhasePoint& front, double dir, const Vec& inv_mass) {
  const Vec d = dir * (front.x - rear.x);
  return d.dot((inv_mass.array() * rear.p.array()).matrix()) < 0.0 ||
         d.dot((inv_mass.array() * front.p.array()).matrix()) < 0.0;
}

struct TreeStats {
  double h0 = 0.0;
  double divergence_threshold = kDivergenceThreshold;
  double sum_accept = 0.0;
  int n_leapfrog = 0;
};

struct Subtree {
  PhasePoint rear, front;
  Vec proposal;
  double log_sum_w = kNegInf;
  bool divergent = false;
  bool turning = false;
};

// Builds 2^depth leapfrog steps from `from` in direction dir, multinomial
// proposal within the subtree.
Subtree build_tree(const PhasePoint& from, int depth, double dir, double eps,
                   const Vec& inv_mass, const LogDensity& target, TreeStats& stats,
                   std::mt19937_64& rng) {
  if (depth == 0) {
    Subtree leaf;
    PhasePoint z = from;
    leapfrog(z, dir * eps, inv_mass, target);
    ++stats.n_leapfrog;
    const double h = std::isfinite(z.logp) ? -z.logp + kinetic(z.p, inv_mass)
                                           : std::numeric_limits<double>::infinity();
    const double dh = h - stats.h0;
    if (!std::isfinite(dh) || dh > stats.divergence_threshold) {
      leaf.divergent = true;
      leaf.log_sum_w = kNegInf;
    } else {
      leaf.log_sum_w = -dh;
      stats.sum_accept += std::min(1.0, std::exp(-dh));
    }
    leaf.rear = z;
    leaf.front = std::move(z);
    leaf.proposal = leaf.front.x;
    return leaf;
  }

  Subtree first = build_tree(from, depth - 1, dir, eps, inv_mass, target, stats, rng);
  if (first.divergent || first.turning) return first;
  Subtree second = build_tree(first.front, depth - 1, dir, eps, inv_mass, target, stats, rng);

  Subtree merged;
  merged.rear = std::move(first.rear);
  merged.front = std::move(second.front);
  merged.divergent = second.divergent;
  merged.log_sum_w = log_sum_exp(first.log_sum_w, second.log_sum_w);
  if (merged.divergent) {
    merged.turning = second.turning;
    merged.proposal = std::move(first.proposal);
    return merged;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool take_second =
      std::log(unif(rng)) < second.log_sum_w - merged.log_sum_w;
  merged.proposal = take_second ? std::move(second.proposal) : std::move(first.proposal);
  merged.turning = second.turning || uturn(merged.rear, merged.front, dir, inv_mass);
  return merged;
}

}  // namespace

TransitionStats hmc_transition(ChainState& state, const LogDensity& target, int max_tree_depth,
                               double divergence_threshold) {
  const int n = target.dim();
  if (state.mass_diag.size() != n) state.mass_diag = Vec::Ones(n);
  const Vec& inv_mass = state.mass_diag;

  PhasePoint z0;
  z0.x = state.position;
  z0.grad.resize(n);
  z0.logp = target.value_grad(z0.x, z0.grad);
  if (!std::isfinite(z0.logp)) {
    throw NumericError("hmc_transition: current position has non-finite density");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  z0.p.resize(n);
  for (int i = 0; i < n; ++i) z0.p[i] = normal(state.rng) / std::sqrt(inv_mass[i]);

  TreeStats stats;
  stats.h0 = -z0.logp + kinetic(z0.p, inv_mass);
  stats.divergence_threshold = divergence_threshold;

  PhasePoint z_minus = z0;
  PhasePoint z_plus = z0;
  Vec sample = z0.x;
  double log_sum_w = 0.0;  // weight of the initial point
  bool divergent = false;
  int depth = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (; depth < max_tree_depth; ++depth) {
    const double dir = unif(state.rng) < 0.5 ? -1.0 : 1.0;
    const PhasePoint& end = dir > 0 ? z_plus : z_minus;
    Subtree sub = build_tree(end, depth, dir, state.step_size, inv_mass, target, stats,
                             state.rng);
    if (sub.divergent) {
      divergent = true;
      break;
    }
    if (sub.turning) break;
    if (std::log(unif(state.rng)) < sub.log_sum_w - log_sum_w) {
      sample = sub.proposal;
    }
    log_sum_w = log_sum_exp(log_sum_w, sub.log_sum_w);
    if (dir > 0) {
      z_plus = std::move(sub.front);
    } else {
      z_minus = std::move(sub.front);
    }
    if (uturn(z_minus, z_plus, 1.0, inv_mass)) {
      ++depth;
      break;
    }
  }

  state.position = std::move(sample);
  ++state.iteration;
  TransitionStats out;
  out.accept_stat = stats.n_leapfrog > 0 ? stats.sum_accept / stats.n_leapfrog : 0.0;
  out.depth = depth;
  out.n_leapfrog = stats.n_leapfrog;
  out.divergent = divergent;
  out.energy = stats.h0;
  return out;
}

TransitionStats static_hmc_transition(ChainState& state, const LogDensity& target, int n_steps) {
  const int n = target.dim();
  if (state.mass_diag.size() != n) state.mass_diag = Vec::Ones(n);
  const Vec& inv_mass = state.mass_diag;

  PhasePoint z;
  z.x = state.position;
  z.grad.resize(n);
  z.logp = target.value_grad(z.x, z.grad);
  if (!std::isfinite(z.logp)) {
    throw NumericError("hmc_transition: current position has non-finite density");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  z.p.resize(n);
  for (int i = 0; i < n; ++i) z.p[i] = normal(state.rng) / std::sqrt(inv_mass[i]);
  const double h0 = -z.logp + kinetic(z.p, inv_mass);

  for (int s = 0; s < n_steps && std::isfinite(z.logp); ++s) {
    leapfrog(z, state.step_size, inv_mass, target);
  }
  const double h1 = std::isfinite(z.logp) ? -z.logp + kinetic(z.p, inv_mass)
                                          : std::numeric_limits<double>::infinity();
  const double dh = h1 - h0;

  TransitionStats out;
  out.n_leapfrog = n_steps;
  out.energy = h0;
  out.divergent = !std::isfinite(dh) || dh > kDivergenceThreshold;
  out.accept_stat = out.divergent ? 0.0 : std::min(1.0, std::exp(-dh));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (!out.divergent && unif(state.rng) < std::exp(-dh)) {
    state.position = z.x;
  }
  ++state.iteration;
  return out;
}

namespace {

struct DualAverage {
  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  int t = 0;
  static constexpr double gamma = 0.05;
  static constexpr double t0 = 10.0;
  static constexpr double kappa = 0.75;

  void init(double eps) {
    mu = std::log(10.0 * eps);
    log_eps = std::log(eps);
    log_eps_bar = std::log(eps);
    h_bar = 0.0;
    t = 0;
  }
  double update(double accept, double target) {
    ++t;
    const double w = 1.0 / (t + t0);
    h_bar = (1.0 - w) * h_bar + w * (target - accept);
    log_eps = mu - std::sqrt(static_cast<double>(t)) / gamma * h_bar;
    const double k = std::pow(static_cast<double>(t), -kappa);
    log_eps_bar = k * log_eps + (1.0 - k) * log_eps_bar;
    return std::exp(log_eps);
  }
};

struct Welford {
  Vec mean, m2;
  long n = 0;
  void reset(int dim) {
    mean = Vec::Zero(dim);
    m2 = Vec::Zero(dim);
    n = 0;
  }
  void add(const Vec& x) {
    ++n;
    const Vec d = x - mean;
    mean += d / static_cast<double>(n);
    m2.array() += d.array() * (x - mean).array();
  }
  Vec variance() const {
    if (n < 2) return Vec::Ones(mean.size());
    return m2 / static_cast<double>(n - 1);
  }
};

// Crude step-size search: double/halve until the one-step accept probability
// crosses 1/2.
double find_reasonable_epsilon(const ChainState& state, const LogDensity& target) {
  const int n = target.dim();
  const Vec& inv_mass = state.mass_diag;
  PhasePoint z0;
  z0.x = state.position;
  z0.grad.resize(n);
  z0.logp = target.value_grad(z0.x, z0.grad);
  if (!std::isfinite(z0.logp)) {
    throw NumericError("step size search: non-finite density at the initial position");
  }
  std::mt19937_64 rng = state.rng;  // copy; the search must not disturb the chain stream
  std::normal_distribution<double> normal(0.0, 1.0);
  z0.p.resize(n);
  for (int i = 0; i < n; ++i) z0.p[i] = normal(rng) / std::sqrt(inv_mass[i]);
  const double h0 = -z0.logp + kinetic(z0.p, inv_mass);

  double eps = std::clamp(state.step_size, 1e-6, 10.0);
  auto accept_at = [&](double e) {
    PhasePoint z = z0;
    leapfrog(z, e, inv_mass, target);
    if (!std::isfinite(z.logp)) return 0.0;
    const double h1 = -z.logp + kinetic(z.p, inv_mass);
    return std::exp(std::min(0.0, h0 - h1));
  };
  double a = accept_at(eps);
  const bool grow = a > 0.5;
  for (int it = 0; it < 60; ++it) {
    eps *= grow ? 2.0 : 0.5;
    a = accept_at(eps);
    if (grow ? a <= 0.5 : a >= 0.5) break;
    if (eps < 1e-12 || eps > 1e6) break;
  }
  return std::max(eps, 1e-12);
}

std::vector<int> adaptation_windows(int n) {
  // init buffer (step size only), doubling variance windows, final buffer.
  int init = 25, term = 50, base = 25;
  if (n < 150) {
    init = std::max(10, static_cast<int>(0.15 * n));
    term = std::max(10, static_cast<int>(0.10 * n));
    base = std::max(10, (n - init - term) / 4);
  }
  std::vector<int> bounds;  // iteration indices where a variance window closes
  int pos = init;
  int w = base;
  const int end = n - term;
  while (pos < end) {
    int next = pos + w;
    if (next + 2 * w > end) next = end;  // absorb the remainder
    bounds.push_back(next);
    pos = next;
    w *= 2;
  }
  return bounds;
}

}  // namespace

AdaptResult warmup_adapt(ChainState& state, const LogDensity& target, int schedule_len,
                         double target_accept, int max_tree_depth, bool nuts, int hmc_steps) {
  if (schedule_len < 100) {
    throw ConfigError("warmup schedule must be at least 100 iterations");
  }
  const int n = target.dim();
  if (state.mass_diag.size() != n) state.mass_diag = Vec::Ones(n);

  AdaptResult result;
  const std::vector<int> bounds = adaptation_windows(schedule_len);

  DualAverage da;
  da.init(find_reasonable_epsilon(state, target));
  state.step_size = std::exp(da.log_eps);

  Welford wf;
  wf.reset(n);
  std::size_t window = 0;
  int window_start = 0;
  int window_divergences = 0;
  double window_accept = 0.0;

  for (int t = 0; t < schedule_len; ++t) {
    TransitionStats ts = nuts ? hmc_transition(state, target, max_tree_depth)
                              : static_hmc_transition(state, target, hmc_steps);
    state.step_size = da.update(ts.accept_stat, target_accept);
    window_divergences += ts.divergent ? 1 : 0;
    window_accept += ts.accept_stat;
    result.divergences += ts.divergent ? 1 : 0;
    wf.add(state.position);

    const bool window_end =
        window < bounds.size() && t + 1 == bounds[window];
    const bool last_iter = t + 1 == schedule_len;
    if (window_end || last_iter) {
      const int len = t + 1 - window_start;
      if (len > 0 && window_divergences * 2 > len) {
        result.warnings.push_back("adaptation window ending at iteration " +
                                  std::to_string(t + 1) + ": " +
                                  std::to_string(window_divergences) + "/" +
                                  std::to_string(len) + " divergent transitions");
      }
      result.mean_accept = len > 0 ? window_accept / len : 0.0;
      if (window_end) {
        // freeze a new diagonal mass from this window's variance, then
        // restart the step-size search under the new metric
        const Vec var = wf.variance();
        const double shrink = static_cast<double>(wf.n) / (wf.n + 5.0);
        state.mass_diag = (shrink * var.array() + (1.0 - shrink) * 1e-3).matrix();
        wf.reset(n);
        da.init(find_reasonable_epsilon(state, target));
        state.step_size = std::exp(da.log_eps);
        ++window;
      }
      window_start = t + 1;
      window_divergences = 0;
      window_accept = 0.0;
    }
  }
  state.step_size = std::exp(da.log_eps_bar);
  return result;
}

int count_active_sources(const Mat& lambda, double zeta) {
  if (!(zeta > 0.0)) throw ConfigError("zeta must be positive");
  int count = 0;
  for (Eigen::Index k = 0; k < lambda.rows(); ++k) {
    if (lambda.row(k).cwiseAbs().minCoeff() > zeta) ++count;
  }
  return std::max(1, count);
}

Vec default_init(const ParamLayout& layout, const HyperParams& hyper, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  Vec v(layout.size);
  for (int i = 0; i < layout.size; ++i) v[i] = unif(rng);
  // ranges start near the prior mean rather than at e^0 = 1 km
  const double log_rho0 = std::log(hyper.b_rho / (hyper.a_rho - 1.0));
  for (int k = 0; k < layout.dims.K; ++k) {
    v[layout.off_rho + k] = log_rho0 + v[layout.off_rho + k];
  }
  return v;
}

Vec default_inv_mass(const ParamLayout& layout) {
  const auto& d = layout.dims;
  Vec m(layout.size);
  auto fill = [&](int off, int count, double sd) {
    m.segment(off, count).setConstant(sd * sd);
  };
  fill(layout.off_lambda, d.K * d.M, 0.1);
  fill(layout.off_phi, d.K * d.M, 0.6);
  fill(layout.off_delta, d.K, 0.15);
  fill(layout.off_h, d.K * (d.C - 1), 0.05);
  fill(layout.off_beta, d.p * d.K, 0.2);
  fill(layout.off_m0, d.p, 0.5);
  fill(layout.off_s0, 1, 0.4);
  fill(layout.off_w, d.K * d.N, 0.5);
  fill(layout.off_rho, d.K, 0.3);
  fill(layout.off_sigma, d.C, 0.02);
  return m;
}

namespace {

// Keep the k_new sources with the largest min_m |lambda_{k,m}|, preserving
// their original order, and rebuild delta so the retained etas are unchanged.
Vec shrink_position(const Vec& position, const ParamLayout& old_layout,
                    const ParamLayout& new_layout, const Mat& dist) {
  const ModelParams full = constrain(position, old_layout, dist);
  const int k_old = old_layout.dims.K;
  const int k_new = new_layout.dims.K;

  std::vector<int> order(static_cast<std::size_t>(k_old));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return full.lambda.row(a).cwiseAbs().minCoeff() > full.lambda.row(b).cwiseAbs().minCoeff();
  });
  std::vector<int> keep(order.begin(), order.begin() + k_new);
  std::sort(keep.begin(), keep.end());

  const Vec eta = eta_from_delta(full.delta);
  ModelParams out;
  out.lambda.resize(k_new, old_layout.dims.M);
  out.phi.resize(k_new, old_layout.dims.M);
  out.delta.resize(k_new);
  out.H.resize(k_new, old_layout.dims.C);
  out.beta.resize(old_layout.dims.p, k_new);
  out.W.resize(k_new, old_layout.dims.N);
  out.rho.resize(k_new);
  out.m0 = full.m0;
  out.s0 = full.s0;
  out.sigma = full.sigma;
  double prev_eta = 1.0;
  for (int j = 0; j < k_new; ++j) {
    const int k = keep[static_cast<std::size_t>(j)];
    out.lambda.row(j) = full.lambda.row(k);
    out.phi.row(j) = full.phi.row(k);
    out.H.row(j) = full.H.row(k);
    out.beta.col(j) = full.beta.col(k);
    out.W.row(j) = full.W.row(k);
    out.rho[j] = full.rho[k];
    out.delta[j] = eta[k] / prev_eta;
    prev_eta = eta[k];
  }
  return unconstrain(out, new_layout, dist);
}

}  // namespace

EstimateKResult estimate_num_sources(const DataBundle& data, const HyperParams& hyper,
                                     const SamplerConfig& config) {
  hyper.validate();
  config.validate();

  EstimateKResult result;
  int K = config.k_init;
  ModelDims dims{K, data.knots.num_basis, data.n_pollutants(), data.n_covariates(),
                 data.n_sites()};
  ParamLayout layout = ParamLayout::make(dims, config.gp);
  std::mt19937_64 init_rng = make_stream(config.seed, stream::init);
  Vec position = default_init(layout, hyper, init_rng);

  for (int batch = 1; batch <= config.k_init + 1; ++batch) {
    ModelTarget target(data, hyper, layout);
    ChainState state;
    state.position = position;
    state.mass_diag = default_inv_mass(layout);
    state.rng = make_stream(config.seed, stream::estimate_k + static_cast<std::uint64_t>(batch));
    AdaptResult ar = warmup_adapt(state, target, config.batch_size, config.target_accept,
                                  config.max_tree_depth, config.nuts, config.hmc_steps);
    result.divergences += ar.divergences;
    for (auto& w : ar.warnings) {
      result.warnings.push_back("batch " + std::to_string(batch) + ": " + w);
    }

    const ModelParams params = constrain(state.position, layout, data.dist);
    const int k_active = count_active_sources(params.lambda, config.zeta);
    result.trace.push_back({batch, K, k_active});

    if (k_active == K) {
      result.k_star = K;
      result.final_position = state.position;
      return result;
    }
    const int k_new = std::min(k_active, K);  // enforced nonincreasing
    ModelDims new_dims = dims;
    new_dims.K = k_new;
    ParamLayout new_layout = ParamLayout::make(new_dims, config.gp);
    position = shrink_position(state.position, layout, new_layout, data.dist);
    K = k_new;
    dims = new_dims;
    layout = new_layout;
  }
  // K is nonincreasing and floored at 1, so the loop exits via the equality
  // test; this is unreachable with a correct count.
  throw NumericError("estimate_num_sources failed to stabilize");
}

PosteriorDraws run_chain(const DataBundle& data, const HyperParams& hyper, int k_star,
                         const SamplerConfig& config, RunReport* report, const Vec* init) {
  hyper.validate();
  config.validate();
  if (k_star < 1) throw ConfigError("k_star must be at least 1");

  const auto start_time = std::chrono::steady_clock::now();
  const ModelDims dims{k_star, data.knots.num_basis, data.n_pollutants(), data.n_covariates(),
                       data.n_sites()};
  const ParamLayout layout = ParamLayout::make(dims, config.gp);
  if (init && init->size() != layout.size) {
    throw ConfigError("run_chain: init vector does not match the layout for k_star");
  }

  const int n_keep = config.n_iter - config.burn_in;
  PosteriorDraws draws;
  draws.dims = dims;
  draws.draws_per_chain = n_keep;
  draws.n_chains = config.n_chains;
  draws.k_star = k_star;
  draws.seed = config.seed;

  const int total = n_keep * config.n_chains;
  auto add_block = [&](const char* name, int r, int c) {
    draws.blocks.push_back(DrawBlock{name, r, c, Mat::Zero(total, r * c)});
  };
  add_block("Lambda", dims.K, dims.M);
  add_block("phi", dims.K, dims.M);
  add_block("delta", dims.K, 1);
  add_block("H", dims.K, dims.C);
  add_block("beta", dims.p, dims.K);
  add_block("m0", dims.p, 1);
  add_block("s0", 1, 1);
  add_block("W", dims.K, dims.N);
  add_block("rho", dims.K, 1);
  add_block("sigma", dims.C, 1);

  std::vector<ChainReport> chain_reports(static_cast<std::size_t>(config.n_chains));
  std::vector<long> chain_divergences(static_cast<std::size_t>(config.n_chains), 0);

  auto run_one = [&](int chain) {
    ModelTarget target(data, hyper, layout);
    ChainState state;
    state.rng = make_stream(config.seed, stream::chain_base + static_cast<std::uint64_t>(chain));
    if (init && chain == 0) {
      state.position = *init;
    } else {
      state.position = default_init(layout, hyper, state.rng);
    }
    state.mass_diag = default_inv_mass(layout);

    AdaptResult ar = warmup_adapt(state, target, config.burn_in, config.target_accept,
                                  config.max_tree_depth, config.nuts, config.hmc_steps);
    auto& cr = chain_reports[static_cast<std::size_t>(chain)];
    cr.warnings = ar.warnings;
    cr.warmup_divergences = ar.divergences;

    double accept_sum = 0.0;
    for (int t = 0; t < n_keep; ++t) {
      TransitionStats ts = config.nuts
                               ? hmc_transition(state, target, config.max_tree_depth)
                               : static_hmc_transition(state, target, config.hmc_steps);
      accept_sum += ts.accept_stat;
      if (ts.divergent) ++chain_divergences[static_cast<std::size_t>(chain)];
      const ModelParams p = constrain(state.position, layout, data.dist);
      const int row = chain * n_keep + t;
      auto put = [&](int idx, const double* src, int count) {
        for (int j = 0; j < count; ++j) draws.blocks[static_cast<std::size_t>(idx)].data(row, j) = src[j];
      };
      put(0, p.lambda.data(), dims.K * dims.M);
      put(1, p.phi.data(), dims.K * dims.M);
      put(2, p.delta.data(), dims.K);
      put(3, p.H.data(), dims.K * dims.C);
      put(4, p.beta.data(), dims.p * dims.K);
      put(5, p.m0.data(), dims.p);
      draws.blocks[6].data(row, 0) = p.s0;
      put(7, p.W.data(), dims.K * dims.N);
      put(8, p.rho.data(), dims.K);
      put(9, p.sigma.data(), dims.C);
    }
    cr.step_size = state.step_size;
    cr.mean_accept = n_keep > 0 ? accept_sum / n_keep : 0.0;
    cr.divergences = static_cast<int>(chain_divergences[static_cast<std::size_t>(chain)]);
  };

  if (config.n_chains == 1) {
    run_one(0);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(config.n_chains));
    for (int c = 0; c < config.n_chains; ++c) workers.emplace_back(run_one, c);
    for (auto& w : workers) w.join();
  }

  for (long d : chain_divergences) draws.divergences += d;
  if (report) {
    report->chains = chain_reports;
    report->max_split_rhat = config.n_chains > 1 ? max_split_rhat(draws) : 0.0;
    report->wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  }
  return draws;
}

}  // namespace bsa
