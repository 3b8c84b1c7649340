#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <random>
#include <string>
#include <vector>

#include "bsa/data.hpp"
#include "bsa/model.hpp"
#include "bsa/rng.hpp"
#include "bsa/types.hpp"

namespace testutil {

inline bsa::SiteSet make_sites(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lat(32.0, 42.0), lon(-124.0, -114.0),
      elev(0.0, 2500.0);
  std::uniform_int_distribution<int> lu(0, 2);
  bsa::SiteSet s;
  for (int i = 0; i < n; ++i) {
    s.sites.push_back(bsa::Site{"s" + std::to_string(i + 1), lat(rng), lon(rng), elev(rng),
                                static_cast<bsa::LandUse>(lu(rng))});
  }
  return s;
}

// Random observations on per-site day subsets; y values are pure noise, which
// is all the density/gradient oracles need.
inline bsa::ObservationSet make_obs(const bsa::SiteSet& sites, int n_pollutants, int days_per_site,
                                    std::mt19937_64& rng, double missing_frac = 0.0) {
  bsa::ObservationSet obs;
  for (int c = 0; c < n_pollutants; ++c) obs.pollutants.push_back("p" + std::to_string(c + 1));
  obs.year = 2021;
  obs.days_in_year = 365;
  obs.log_floor = 0.0;
  std::uniform_int_distribution<int> day(1, 365);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& site : sites.sites) {
    std::vector<int> days;
    while (static_cast<int>(days.size()) < days_per_site) {
      const int d = day(rng);
      bool dup = false;
      for (int e : days) dup |= e == d;
      if (!dup) days.push_back(d);
    }
    std::sort(days.begin(), days.end());
    for (int d : days) {
      for (int c = 0; c < n_pollutants; ++c) {
        if (unif(rng) < missing_frac) continue;
        bsa::ObservationRecord r;
        r.site_id = site.id;
        r.day = d;
        r.pollutant = obs.pollutants[static_cast<std::size_t>(c)];
        r.log_value = normal(rng);
        r.concentration = std::exp(r.log_value);
        obs.records.push_back(std::move(r));
      }
    }
  }
  return obs;
}

inline bsa::DataBundle small_bundle(int n_sites, int n_pollutants, int m_basis, int days_per_site,
                                    std::uint64_t seed, double missing_frac = 0.0) {
  auto rng = bsa::make_stream(seed, 777);
  const bsa::SiteSet sites = make_sites(n_sites, rng);
  const bsa::ObservationSet obs = make_obs(sites, n_pollutants, days_per_site, rng, missing_frac);
  return bsa::DataBundle::build(obs, sites, m_basis);
}

// Mild random point on the unconstrained scale; ranges start near 300 km so
// the spatial covariances stay well conditioned.
inline bsa::Vec random_position(const bsa::ParamLayout& layout, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  bsa::Vec v(layout.size);
  for (int i = 0; i < layout.size; ++i) v[i] = unif(rng);
  for (int k = 0; k < layout.dims.K; ++k) {
    v[layout.off_rho + k] = std::log(300.0) + v[layout.off_rho + k];
  }
  return v;
}

}  // namespace testutil
