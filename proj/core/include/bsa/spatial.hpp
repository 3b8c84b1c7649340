#pragma once

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bsa/types.hpp"

namespace bsa {

enum class LandUse { rural, suburban, urban };

LandUse parse_land_use(const std::string& s);
std::string land_use_name(LandUse lu);

struct Site {
  std::string id;
  double lat = 0.0;        // degrees
  double lon = 0.0;        // degrees
  double elevation_m = 0.0;
  LandUse land_use = LandUse::rural;
};

struct SiteSet {
  std::vector<Site> sites;

  int size() const { return static_cast<int>(sites.size()); }
  /// Unique ids, coordinates in range. Throws DataError otherwise.
  void validate() const;
  int index_of(const std::string& id) const;  // -1 if unknown
};

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle (haversine) distance in km.
double haversine_km(double lat1, double lon1, double lat2, double lon2);
double geo_distance(const Site& a, const Site& b);

/// N x N symmetric matrix of pairwise great-circle distances.
Mat distance_matrix(const SiteSet& sites);

/// Exponential covariance exp(-d/rho) with unit marginal variance; the
/// diagonal is exactly 1. Throws NumericError if rho <= 0.
Mat exp_cov(const Mat& dist, double rho);

inline constexpr std::array<double, 4> kDefaultJitters{0.0, 1e-10, 1e-8, 1e-6};

struct CholFactor {
  Mat lower;      ///< L with L L^T = m + jitter I
  double jitter;  ///< the jitter that succeeded
};

/// Cholesky with escalating diagonal jitter. Tries the schedule in order and
/// keeps the first factorization that succeeds; throws NumericError when the
/// whole schedule fails.
CholFactor chol_psd(const Mat& m, std::span<const double> jitter_schedule = kDefaultJitters);

/// One mean-zero draw with covariance L L^T.
Vec gp_draw(const CholFactor& chol, std::mt19937_64& rng);

}  // namespace bsa
