#include "bsa/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bsa/errors.hpp"

namespace bsa {

double quantile(Vec values, double p) {
  const Eigen::Index n = values.size();
  if (n == 0) throw DataError("quantile of empty vector");
  std::sort(values.data(), values.data() + n);
  if (n == 1) return values[0];
  const double h = (static_cast<double>(n) - 1.0) * p;
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  if (lo >= n - 1) return values[n - 1];
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

SummaryTable summarize(const PosteriorDraws& draws, std::string_view block, double prob) {
  if (draws.total_draws() <= 0) throw DataError("summarize: no retained draws");
  if (!(prob > 0.0 && prob < 1.0)) throw ConfigError("summarize: prob must lie in (0,1)");
  const auto& b = draws.block(block);
  SummaryTable table;
  table.block = b.name;
  table.rows = b.rows;
  table.cols = b.cols;
  table.prob = prob;
  const double tail = (1.0 - prob) / 2.0;
  for (int j = 0; j < b.rows * b.cols; ++j) {
    SummaryRow r;
    r.row = j % b.rows + 1;  // column-major flattening
    r.col = j / b.rows + 1;
    r.median = quantile(b.data.col(j), 0.5);
    r.lo = quantile(b.data.col(j), tail);
    r.hi = quantile(b.data.col(j), 1.0 - tail);
    table.entries.push_back(r);
  }
  return table;
}

Mat SummaryTable::medians() const {
  Mat m(rows, cols);
  for (const auto& e : entries) m(e.row - 1, e.col - 1) = e.median;
  return m;
}

Mat normalize_contributions(const Mat& h_medians) {
  if ((h_medians.array() < 0.0).any()) {
    throw NumericError("normalize_contributions: negative entry");
  }
  Mat alpha(h_medians.rows(), h_medians.cols());
  for (Eigen::Index c = 0; c < h_medians.cols(); ++c) {
    const double total = h_medians.col(c).sum();
    if (!(total > 0.0)) {
      throw NumericError("normalize_contributions: pollutant column " + std::to_string(c + 1) +
                         " sums to zero");
    }
    alpha.col(c) = h_medians.col(c) / total;
  }
  return alpha;
}

EmissionBand emission_band(const PosteriorDraws& draws, const DataBundle& data, int site,
                           int source, const std::vector<double>& grid, double prob) {
  const int n = draws.total_draws();
  if (site < 0 || site >= data.n_sites()) throw DataError("emission_band: unknown site index");
  if (source < 0 || source >= draws.k_star) throw DataError("emission_band: unknown source index");
  const Mat B = basis_matrix(data.knots, grid).values;  // M x T
  const Eigen::Index T = B.cols();

  Mat g(n, T);
  const Vec x = data.X.row(site).transpose();
  for (int t = 0; t < n; ++t) {
    const Mat lambda = draws.draw("Lambda", t);
    const Mat beta = draws.draw("beta", t);
    const Mat W = draws.draw("W", t);
    const double gamma = std::exp(beta.col(source).dot(x) + W(source, site));
    g.row(t) = gamma * (lambda.row(source) * B);
  }
  EmissionBand band;
  band.times = grid;
  band.median.resize(T);
  band.lo.resize(T);
  band.hi.resize(T);
  const double tail = (1.0 - prob) / 2.0;
  for (Eigen::Index j = 0; j < T; ++j) {
    band.median[j] = quantile(g.col(j), 0.5);
    band.lo[j] = quantile(g.col(j), tail);
    band.hi[j] = quantile(g.col(j), 1.0 - tail);
  }
  return band;
}

std::vector<Mat> predictive_draws(const PosteriorDraws& draws, const DataBundle& data, int site,
                                  const std::vector<double>& times, std::mt19937_64& rng,
                                  bool original_scale) {
  const int n = draws.total_draws();
  if (site < 0 || site >= data.n_sites()) throw DataError("predictive_draws: unknown site index");
  const int C = data.n_pollutants();
  const Mat B = basis_matrix(data.knots, times).values;  // M x T
  const Eigen::Index T = B.cols();
  const Vec x = data.X.row(site).transpose();

  std::vector<Mat> out(static_cast<std::size_t>(C), Mat(n, T));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < n; ++t) {
    const Mat lambda = draws.draw("Lambda", t);
    const Mat beta = draws.draw("beta", t);
    const Mat W = draws.draw("W", t);
    const Mat H = draws.draw("H", t);
    const Mat sigma = draws.draw("sigma", t);
    const Vec gamma = (beta.transpose() * x + W.col(site)).array().exp();
    const Mat f = lambda * B;                                     // K x T
    const Mat mu = H.transpose() * (f.array().colwise() * gamma.array()).matrix();  // C x T
    for (int c = 0; c < C; ++c) {
      for (Eigen::Index j = 0; j < T; ++j) {
        double y = mu(c, j) + sigma(c, 0) * normal(rng);
        if (original_scale) y = std::exp(y);
        out[static_cast<std::size_t>(c)](t, j) = y;
      }
    }
  }
  return out;
}

Mat empirical_coverage(const PosteriorDraws& draws, const DataBundle& data,
                       std::mt19937_64& rng, double prob) {
  const int N = data.n_sites();
  const int C = data.n_pollutants();
  const double tail = (1.0 - prob) / 2.0;
  Mat coverage = Mat::Constant(N, C, std::nan(""));
  for (int i = 0; i < N; ++i) {
    const auto& sd = data.site_data[static_cast<std::size_t>(i)];
    if (sd.times.empty()) continue;
    const auto pred = predictive_draws(draws, data, i, sd.times, rng);
    for (int c = 0; c < C; ++c) {
      int n_obs = 0, n_in = 0;
      for (std::size_t j = 0; j < sd.times.size(); ++j) {
        if (sd.observed(c, static_cast<Eigen::Index>(j)) == 0.0) continue;
        ++n_obs;
        const double lo = quantile(pred[static_cast<std::size_t>(c)].col(static_cast<Eigen::Index>(j)), tail);
        const double hi = quantile(pred[static_cast<std::size_t>(c)].col(static_cast<Eigen::Index>(j)), 1.0 - tail);
        const double y = sd.y(c, static_cast<Eigen::Index>(j));
        if (y >= lo && y <= hi) ++n_in;
      }
      if (n_obs > 0) coverage(i, c) = static_cast<double>(n_in) / n_obs;
    }
  }
  return coverage;
}

std::vector<int> align_sources(const Mat& h_est, const Mat& h_ref) {
  if (h_est.rows() != h_ref.rows() || h_est.cols() != h_ref.cols()) {
    throw DataError("align_sources: shape mismatch between estimate and reference");
  }
  const int K = static_cast<int>(h_est.rows());
  if (K > 10) throw DataError("align_sources: exhaustive search limited to K <= 10");

  // cost(j, k) = L1 distance between reference row j and estimate row k
  Mat cost(K, K);
  for (int j = 0; j < K; ++j) {
    for (int k = 0; k < K; ++k) {
      cost(j, k) = (h_ref.row(j) - h_est.row(k)).cwiseAbs().sum();
    }
  }
  std::vector<int> perm(static_cast<std::size_t>(K));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int j = 0; j < K; ++j) c += cost(j, perm[static_cast<std::size_t>(j)]);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double max_split_rhat(const PosteriorDraws& draws) {
  const int half = draws.draws_per_chain / 2;
  if (half < 2) return 0.0;
  const int m = 2 * draws.n_chains;  // split sequences
  double worst = 0.0;
  for (const auto& b : draws.blocks) {
    for (int j = 0; j < b.rows * b.cols; ++j) {
      Vec means(m), vars(m);
      for (int c = 0; c < draws.n_chains; ++c) {
        for (int s = 0; s < 2; ++s) {
          const int start = c * draws.draws_per_chain + s * half;
          const auto seg = b.data.col(j).segment(start, half);
          const double mean = seg.mean();
          means[c * 2 + s] = mean;
          vars[c * 2 + s] = (seg.array() - mean).square().sum() / (half - 1);
        }
      }
      const double w = vars.mean();
      if (!(w > 0.0)) continue;  // constant coordinate
      const double grand = means.mean();
      const double var_means = (means.array() - grand).square().sum() / (m - 1);
      const double var_plus = (half - 1.0) / half * w + var_means;
      worst = std::max(worst, std::sqrt(var_plus / w));
    }
  }
  return worst;
}

}  // namespace bsa
