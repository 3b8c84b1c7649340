#include "bsa/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "bsa/errors.hpp"

namespace bsa {

Mat build_design(const SiteSet& sites) {
  const int n = sites.size();
  if (n == 0) throw DataError("build_design: empty site set");
  Mat x = Mat::Zero(n, 4);
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += sites.sites[static_cast<std::size_t>(i)].elevation_m;
  mean /= n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = sites.sites[static_cast<std::size_t>(i)].elevation_m - mean;
    ss += d * d;
  }
  const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& s = sites.sites[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = s.land_use == LandUse::suburban ? 1.0 : 0.0;
    x(i, 2) = s.land_use == LandUse::urban ? 1.0 : 0.0;
    x(i, 3) = sd > 0.0 ? (s.elevation_m - mean) / sd : 0.0;
  }
  return x;
}

DataBundle DataBundle::build(const ObservationSet& obs, const SiteSet& sites, int num_basis) {
  sites.validate();
  DataBundle b;
  b.sites = sites;
  b.pollutants = obs.pollutants;
  const int C = static_cast<int>(obs.pollutants.size());
  if (C == 0) throw DataError("observation set has no pollutants");

  std::map<std::string, int> pol_index;
  for (int c = 0; c < C; ++c) pol_index[obs.pollutants[static_cast<std::size_t>(c)]] = c;

  // Group records by site; operational days are those with any record.
  const int N = sites.size();
  std::vector<std::set<double>> days(static_cast<std::size_t>(N));
  std::vector<std::vector<const ObservationRecord*>> by_site(static_cast<std::size_t>(N));
  for (const auto& r : obs.records) {
    const int i = sites.index_of(r.site_id);
    if (i < 0) throw DataError("observation references unknown site '" + r.site_id + "'");
    if (r.day < 1 || r.day > obs.days_in_year) {
      throw DataError("observation day " + std::to_string(r.day) + " outside 1.." +
                      std::to_string(obs.days_in_year));
    }
    by_site[static_cast<std::size_t>(i)].push_back(&r);
    days[static_cast<std::size_t>(i)].insert(static_cast<double>(r.day));
  }

  std::set<double> all_days;
  for (const auto& d : days) all_days.insert(d.begin(), d.end());
  b.grid.assign(all_days.begin(), all_days.end());

  b.knots = build_knots(1.0, static_cast<double>(obs.days_in_year), num_basis);
  b.B_grid = basis_matrix(b.knots, b.grid).values;
  b.X = build_design(sites);
  b.dist = distance_matrix(sites);

  b.n_obs_per_pollutant = Vec::Zero(C);
  for (int i = 0; i < N; ++i) {
    SiteData sd;
    sd.id = sites.sites[static_cast<std::size_t>(i)].id;
    sd.times.assign(days[static_cast<std::size_t>(i)].begin(), days[static_cast<std::size_t>(i)].end());
    const int l = static_cast<int>(sd.times.size());
    sd.grid_index.resize(static_cast<std::size_t>(l));
    for (int j = 0; j < l; ++j) {
      const auto it = std::lower_bound(b.grid.begin(), b.grid.end(), sd.times[static_cast<std::size_t>(j)]);
      sd.grid_index[static_cast<std::size_t>(j)] = static_cast<int>(it - b.grid.begin());
    }
    sd.y = Mat::Zero(C, l);
    sd.observed = Eigen::ArrayXXd::Zero(C, l);
    for (const auto* r : by_site[static_cast<std::size_t>(i)]) {
      if (r->missing) continue;
      const int c = pol_index.at(r->pollutant);
      const auto dit = std::lower_bound(sd.times.begin(), sd.times.end(), static_cast<double>(r->day));
      const int j = static_cast<int>(dit - sd.times.begin());
      sd.y(c, j) = r->log_value;
      sd.observed(c, j) = 1.0;
      b.n_obs_per_pollutant[c] += 1.0;
      b.n_obs += 1;
    }
    b.site_data.push_back(std::move(sd));
  }
  return b;
}

}  // namespace bsa
