#pragma once

#include <string>
#include <vector>

#include "bsa/basis.hpp"
#include "bsa/spatial.hpp"
#include "bsa/types.hpp"

namespace bsa {

/// One measured cell. `day` is the 1-based day-of-year; `log_value` is the
/// (floored) log concentration and is meaningless when `missing` is set.
struct ObservationRecord {
  std::string site_id;
  int day = 0;
  std::string pollutant;
  double concentration = 0.0;  // raw scale, kept for lossless write-back
  double log_value = 0.0;
  bool missing = false;
};

struct ObservationSet {
  std::vector<ObservationRecord> records;
  std::vector<std::string> pollutants;  // order of first appearance
  int year = 2021;
  int days_in_year = 365;
  double log_floor = 0.5;  // epsilon used in log(max(c, eps)); 0 disables
};

/// Per-site design row: intercept, suburban and urban indicators, and
/// elevation standardized to mean 0 / sd 1 across the site set (rural is the
/// baseline). N x 4.
Mat build_design(const SiteSet& sites);

struct SiteData {
  std::string id;
  std::vector<double> times;   // operational days T_i, sorted
  std::vector<int> grid_index; // position of each day in DataBundle::grid
  Mat y;                       // C x l_i log concentrations (junk where unobserved)
  Eigen::ArrayXXd observed;    // C x l_i, 1.0 observed / 0.0 missing
};

/// Immutable fit-ready view of one dataset: design matrix, distance matrix,
/// the shared basis evaluated on the union of observed days, and per-site
/// observation blocks. Shareable across threads.
struct DataBundle {
  SiteSet sites;
  std::vector<std::string> pollutants;
  KnotVector knots;
  Mat X;                     // N x p
  Mat dist;                  // N x N km
  std::vector<double> grid;  // sorted unique observed days
  Mat B_grid;                // M x |grid|
  std::vector<SiteData> site_data;
  Eigen::VectorXd n_obs_per_pollutant;  // length C
  long n_obs = 0;

  int n_sites() const { return sites.size(); }
  int n_pollutants() const { return static_cast<int>(pollutants.size()); }
  int n_covariates() const { return static_cast<int>(X.cols()); }

  static DataBundle build(const ObservationSet& obs, const SiteSet& sites, int num_basis);
};

}  // namespace bsa
