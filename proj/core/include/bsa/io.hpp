#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bsa/data.hpp"
#include "bsa/draws.hpp"
#include "bsa/posterior.hpp"
#include "bsa/sampler.hpp"
#include "bsa/simulate.hpp"

namespace bsa {

// ---- CSV ingestion ---------------------------------------------------------

/// sites CSV: header site_id,lat,lon,elevation_m,land_use (UTF-8, RFC 4180).
SiteSet load_sites(const std::filesystem::path& path);
void write_sites(const SiteSet& sites, const std::filesystem::path& path);

/// observations CSV: header site_id,date,pollutant,concentration_ugm3. Dates
/// are ISO-8601 days within one calendar year; an empty concentration field
/// marks an explicitly missing cell. Applies y = log(max(c, log_floor));
/// log_floor 0 disables flooring and requires positive concentrations.
/// A non-empty whitelist rejects records with other pollutant codes.
ObservationSet load_observations(const std::filesystem::path& path, double log_floor = 0.5,
                                 const std::vector<std::string>& pollutant_whitelist = {});
void write_observations(const ObservationSet& obs, const std::filesystem::path& path);

/// Per-site observation-day counts l_i (sites with any record).
std::map<std::string, int> schedule_counts(const ObservationSet& obs);

// ---- run configuration ------------------------------------------------------

struct RunConfig {
  SamplerConfig sampler;
  HyperParams hyper;
  int m_basis = 15;
  double log_floor = 0.5;
  std::vector<std::string> pollutant_whitelist;
  // simulate
  double noise_frac = 0.1;
  std::string preset = "paper";  // paper | random
  int k_true = 2;
  std::string schedule = "per-pollutant";  // per-pollutant | shared
  // paths and mode
  std::string mode;
  std::string data_path, sites_path, draws_path, out_path;

  void validate() const;
};

/// Flat key = value file (# comments). Unknown keys are errors; values set
/// here are overridden by CLI flags.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Canonical serialization of every config field; the hash changes iff some
/// field changes.
std::string canonical_config(const RunConfig& config);
std::string config_hash(const RunConfig& config);

// ---- outputs ----------------------------------------------------------------

/// Staged output directory: work happens in "<dir>.partial", which replaces
/// dir on commit and is deleted on failure.
class OutputStage {
 public:
  OutputStage(std::filesystem::path final_dir, bool force);
  ~OutputStage();
  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;

  const std::filesystem::path& dir() const { return staging_; }
  void commit();

 private:
  std::filesystem::path final_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

void write_metadata(const std::filesystem::path& dir, const RunConfig& config);

/// Columnar binary draws (draws.bin) plus a JSON index (draws_index.json).
void write_draws(const std::filesystem::path& dir, const PosteriorDraws& draws,
                 const RunConfig& config);
PosteriorDraws read_draws(const std::filesystem::path& dir);

void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& draws,
                     const std::string& block);

void write_ktrace_csv(const std::filesystem::path& path, const std::vector<KTracePoint>& trace);
void write_run_report(const std::filesystem::path& dir, const RunReport& report, int k_star,
                      long divergences);
void write_summary_csv(const std::filesystem::path& path, const SummaryTable& table);
void write_contributions_csv(const std::filesystem::path& path, const Mat& alpha,
                             const std::vector<std::string>& pollutants);
void write_band_csv(const std::filesystem::path& path, const std::string& site_id, int source,
                    const EmissionBand& band);
void write_coverage_csv(const std::filesystem::path& path, const Mat& coverage,
                        const SiteSet& sites, const std::vector<std::string>& pollutants);
void write_truth_json(const std::filesystem::path& path, const SimulationTruth& truth,
                      const Vec& sigma, double noise_frac);
void write_predictions_csv(const std::filesystem::path& path, const std::string& site_id,
                           const std::vector<std::string>& pollutants,
                           const std::vector<double>& times, int year,
                           const std::vector<Mat>& pred, double prob, bool original_scale);

/// ISO date helpers for one calendar year.
int day_of_year(const std::string& iso_date, int* year_out = nullptr);
std::string date_from_day(int year, int day);

}  // namespace bsa
