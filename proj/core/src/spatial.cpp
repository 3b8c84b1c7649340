#include "bsa/spatial.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

#include "bsa/errors.hpp"

namespace bsa {

LandUse parse_land_use(const std::string& s) {
  if (s == "rural") return LandUse::rural;
  if (s == "suburban") return LandUse::suburban;
  if (s == "urban") return LandUse::urban;
  throw DataError("unknown land_use value '" + s + "' (expected rural|suburban|urban)");
}

std::string land_use_name(LandUse lu) {
  switch (lu) {
    case LandUse::rural: return "rural";
    case LandUse::suburban: return "suburban";
    case LandUse::urban: return "urban";
  }
  return "rural";
}

void SiteSet::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& s : sites) {
    if (!seen.insert(s.id).second) {
      throw DataError("duplicate site_id '" + s.id + "'");
    }
    if (s.lat < -90.0 || s.lat > 90.0 || s.lon < -180.0 || s.lon > 180.0) {
      throw DataError("site '" + s.id + "' has coordinates out of range");
    }
  }
}

int SiteSet::index_of(const std::string& id) const {
  for (int i = 0; i < size(); ++i) {
    if (sites[static_cast<std::size_t>(i)].id == id) return i;
  }
  return -1;
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double phi1 = lat1 * deg;
  const double phi2 = lat2 * deg;
  const double dphi = (lat2 - lat1) * deg;
  const double dlam = (lon2 - lon1) * deg;
  const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

double geo_distance(const Site& a, const Site& b) {
  return haversine_km(a.lat, a.lon, b.lat, b.lon);
}

Mat distance_matrix(const SiteSet& sites) {
  const int n = sites.size();
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dij = geo_distance(sites.sites[static_cast<std::size_t>(i)],
                                      sites.sites[static_cast<std::size_t>(j)]);
      d(i, j) = dij;
      d(j, i) = dij;
    }
  }
  return d;
}

Mat exp_cov(const Mat& dist, double rho) {
  if (!(rho > 0.0)) {
    throw NumericError("exp_cov: range parameter must be positive, got " + std::to_string(rho));
  }
  Mat cov = (-dist / rho).array().exp();
  cov.diagonal().setOnes();
  return cov;
}

CholFactor chol_psd(const Mat& m, std::span<const double> jitter_schedule) {
  for (double jitter : jitter_schedule) {
    Mat shifted = m;
    if (jitter > 0.0) shifted.diagonal().array() += jitter;
    Eigen::LLT<Mat> llt(shifted);
    if (llt.info() == Eigen::Success) {
      return CholFactor{llt.matrixL(), jitter};
    }
  }
  throw NumericError("matrix not positive definite after jitter schedule");
}

Vec gp_draw(const CholFactor& chol, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec z(chol.lower.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return chol.lower.triangularView<Eigen::Lower>() * z;
}

}  // namespace bsa
