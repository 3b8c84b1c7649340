#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bsa/model.hpp"
#include "bsa/types.hpp"

namespace bsa {

/// One parameter block's retained draws. `data` is total_draws x (rows*cols)
/// with block coordinates flattened column-major; storage itself is
/// column-major, i.e. all draws of coordinate 0 first.
struct DrawBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  Mat data;
};

/// Retained MCMC samples on the constrained scale plus run metadata.
/// Multi-chain runs stack chains: row r belongs to chain r / draws_per_chain.
struct PosteriorDraws {
  ModelDims dims;
  int draws_per_chain = 0;
  int n_chains = 1;
  int k_star = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  long divergences = 0;
  std::vector<DrawBlock> blocks;

  int total_draws() const { return draws_per_chain * n_chains; }
  bool has_block(std::string_view name) const;
  const DrawBlock& block(std::string_view name) const;  // throws DataError if unknown

  /// Draw t of a block reshaped to rows x cols.
  Mat draw(std::string_view name, int t) const;
};

}  // namespace bsa
