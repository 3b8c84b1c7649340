#pragma once

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "bsa/data.hpp"
#include "bsa/draws.hpp"
#include "bsa/types.hpp"

namespace bsa {

/// Linear-interpolation quantile (R type 7) of unsorted values.
double quantile(Vec values, double p);

struct SummaryRow {
  int row = 0;  // 1-based block coordinates
  int col = 0;
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct SummaryTable {
  std::string block;
  int rows = 0, cols = 0;
  double prob = 0.95;
  std::vector<SummaryRow> entries;

  Mat medians() const;  // rows x cols
};

/// Per-coordinate posterior medians and equal-tailed credible intervals.
/// Throws DataError on an unknown block or empty draws.
SummaryTable summarize(const PosteriorDraws& draws, std::string_view block, double prob = 0.95);

/// Column-normalized contribution profile (the share of each pollutant's
/// concentration attributed to each source). Columns sum to one exactly.
/// Throws NumericError on a negative entry or an all-zero column.
Mat normalize_contributions(const Mat& h_medians);

struct EmissionBand {
  std::vector<double> times;
  Vec median, lo, hi;
};

/// Pointwise posterior band of the local emission g_k(s_i, t) over a time
/// grid, recomputed per draw.
EmissionBand emission_band(const PosteriorDraws& draws, const DataBundle& data, int site,
                           int source, const std::vector<double>& grid, double prob = 0.95);

/// Posterior-predictive draws for one site: per retained draw the model mean
/// plus pollutant noise. Result (per pollutant) is total_draws x |times|;
/// set original_scale to exponentiate.
std::vector<Mat> predictive_draws(const PosteriorDraws& draws, const DataBundle& data, int site,
                                  const std::vector<double>& times, std::mt19937_64& rng,
                                  bool original_scale = false);

/// Fraction of observed values inside their (prob) predictive interval,
/// per site (rows) and pollutant (columns).
Mat empirical_coverage(const PosteriorDraws& draws, const DataBundle& data,
                       std::mt19937_64& rng, double prob = 0.95);

/// Permutation aligning estimated sources to a reference: perm[j] = row of
/// h_est matched to reference row j, minimizing the total absolute
/// difference over all assignments. Throws DataError on shape mismatch.
std::vector<int> align_sources(const Mat& h_est, const Mat& h_ref);

/// Largest split-R-hat over all coordinates of all blocks.
double max_split_rhat(const PosteriorDraws& draws);

}  // namespace bsa
