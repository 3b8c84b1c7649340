#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bsa/draws.hpp"
#include "bsa/model.hpp"
#include "bsa/types.hpp"

namespace bsa {

/// Target density interface for the samplers. Implementations may return
/// -inf (treated as a divergence); the gradient is ignored in that case.
struct LogDensity {
  virtual ~LogDensity() = default;
  virtual int dim() const = 0;
  virtual double value_grad(const Vec& x, Vec& grad) const = 0;
};

/// Adapter evaluating the model's joint posterior; numerical failures
/// (e.g. an unfactorizable spatial covariance) surface as -inf.
struct ModelTarget final : LogDensity {
  const DataBundle* data = nullptr;
  const HyperParams* hyper = nullptr;
  ParamLayout layout;

  ModelTarget(const DataBundle& d, const HyperParams& h, const ParamLayout& l)
      : data(&d), hyper(&h), layout(l) {}
  int dim() const override { return layout.size; }
  double value_grad(const Vec& x, Vec& grad) const override;
};

struct SamplerConfig {
  int n_iter = 10000;
  int burn_in = 6000;
  int k_init = 10;
  int batch_size = 500;
  double zeta = 0.01;          ///< active-row threshold on the lambda scale
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 1;
  int n_chains = 1;
  bool nuts = true;            ///< false: plain HMC with fixed path length
  int hmc_steps = 32;          ///< leapfrog steps for plain HMC
  GpParam gp = GpParam::whitened;

  void validate() const;  // ConfigError on violation
};

struct ChainState {
  Vec position;
  double step_size = 1.0;
  Vec mass_diag;  ///< per-coordinate inverse mass (posterior variance estimate)
  std::mt19937_64 rng;
  long iteration = 0;
};

struct TransitionStats {
  double accept_stat = 0.0;
  int depth = 0;
  int n_leapfrog = 0;
  bool divergent = false;
  double energy = 0.0;
};

inline constexpr double kDivergenceThreshold = 1000.0;  ///< energy error cutoff

/// One dynamic-trajectory (NUTS-style) transition: doubling with a U-turn
/// stop, multinomial selection over the trajectory, divergence guard.
TransitionStats hmc_transition(ChainState& state, const LogDensity& target,
                               int max_tree_depth = 10,
                               double divergence_threshold = kDivergenceThreshold);

/// Plain HMC: n_steps leapfrogs and a Metropolis accept.
TransitionStats static_hmc_transition(ChainState& state, const LogDensity& target, int n_steps);

struct AdaptResult {
  int divergences = 0;
  double mean_accept = 0.0;  ///< over the last adaptation window
  std::vector<std::string> warnings;
};

/// Dual-averaging step-size adaptation towards target_accept plus windowed
/// diagonal mass estimation. Requires schedule_len >= 100. Leaves the state
/// with frozen step size and mass.
AdaptResult warmup_adapt(ChainState& state, const LogDensity& target, int schedule_len,
                         double target_accept, int max_tree_depth, bool nuts = true,
                         int hmc_steps = 32);

/// Rows of lambda whose M entries all exceed zeta in magnitude, floored at 1.
int count_active_sources(const Mat& lambda, double zeta);

struct KTracePoint {
  int batch = 0;
  int k_run = 0;     ///< K used during the batch
  int k_active = 0;  ///< active-row count at the end of the batch
};

struct EstimateKResult {
  int k_star = 0;
  std::vector<KTracePoint> trace;
  Vec final_position;  ///< unconstrained, for the layout at k_star
  int divergences = 0;
  std::vector<std::string> warnings;
};

/// The batched truncation search: run adaptive batches starting at K_init,
/// count active rows of Lambda after each batch, shrink K (carrying over the
/// retained sources) until the count stabilizes. K never increases, so the
/// procedure terminates within k_init batches.
EstimateKResult estimate_num_sources(const DataBundle& data, const HyperParams& hyper,
                                     const SamplerConfig& config);

struct ChainReport {
  double step_size = 0.0;
  double mean_accept = 0.0;
  int divergences = 0;         ///< post-warmup
  int warmup_divergences = 0;
  std::vector<std::string> warnings;
};

struct RunReport {
  std::vector<KTracePoint> k_trace;
  std::vector<ChainReport> chains;
  double max_split_rhat = 0.0;  ///< 0 when a single chain
  double wall_seconds = 0.0;
};

/// Posterior sampling at fixed K: adaptive warmup of burn_in iterations then
/// n_iter - burn_in retained draws per chain, reproducible from the seed.
/// `init` (optional) seeds chain 0, e.g. with the estimate_num_sources state.
PosteriorDraws run_chain(const DataBundle& data, const HyperParams& hyper, int k_star,
                         const SamplerConfig& config, RunReport* report = nullptr,
                         const Vec* init = nullptr);

/// Deterministic default initialization for a model chain.
Vec default_init(const ParamLayout& layout, const HyperParams& hyper, std::mt19937_64& rng);

/// Block-aware starting guess for the diagonal inverse mass; warmup refines
/// it. Posterior scales differ by orders of magnitude across blocks (noise
/// scales are pinned by thousands of cells, spatial effects are not), and a
/// unit metric forces very deep trajectories until the first variance window.
Vec default_inv_mass(const ParamLayout& layout);

}  // namespace bsa
