// bsa: simulate, fit and summarize the Bayesian spatio-temporal source
// apportionment model from the command line.

#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bsa/errors.hpp"
#include "bsa/io.hpp"
#include "bsa/posterior.hpp"
#include "bsa/rng.hpp"
#include "bsa/sampler.hpp"
#include "bsa/simulate.hpp"

namespace {

using namespace bsa;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CliOptions {
  RunConfig config;
  std::string config_file;
  bool force = false;
  // summarize options
  std::string block = "H";
  double prob = 0.95;
  bool contributions = false;
  std::string dump_block;
  std::vector<int> band_sites;
  std::vector<int> band_sources;
  // fit options
  int num_sources = 0;  // 0: estimate via the batched procedure
  // predict options
  std::vector<std::string> predict_sites;
  int day_start = 1, day_end = 365, day_step = 1;
  bool original_scale = false;
};

void require_path(const std::string& value, const char* flag) {
  if (value.empty()) {
    throw ConfigError(std::string(flag) + " is required (flag or config key)");
  }
}

void add_common_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--config", o.config_file, "flat key=value config file (flags win)");
  cmd->add_option("--seed", o.config.sampler.seed, "RNG seed");
  cmd->add_option("--out", o.config.out_path, "output directory");
  cmd->add_flag("--force", o.force, "replace an existing output directory");
}

void add_sampler_flags(CLI::App* cmd, CliOptions& o) {
  auto& s = o.config.sampler;
  cmd->add_option("--n-iter", s.n_iter, "total MCMC iterations (default 10000)");
  cmd->add_option("--burn-in", s.burn_in, "warmup iterations discarded (default 6000)");
  cmd->add_option("--k-init", s.k_init, "initial number of sources (default 10)");
  cmd->add_option("--batch-size", s.batch_size, "source-count batch length (default 500)");
  cmd->add_option("--zeta", s.zeta, "active-row threshold (default 0.01)");
  cmd->add_option("--target-accept", s.target_accept, "adaptation target (default 0.8)");
  cmd->add_option("--max-tree-depth", s.max_tree_depth, "trajectory doubling cap (default 10)");
  cmd->add_option("--n-chains", s.n_chains, "independent chains (default 1)");
  cmd->add_option("--gp-param",
                  [&o](const std::vector<std::string>& v) {
                    if (v[0] == "whitened") o.config.sampler.gp = GpParam::whitened;
                    else if (v[0] == "centered") o.config.sampler.gp = GpParam::centered;
                    else return false;
                    return true;
                  },
                  "spatial-effect parameterization: whitened|centered");
  cmd->add_option("--algorithm",
                  [&o](const std::vector<std::string>& v) {
                    if (v[0] == "nuts") o.config.sampler.nuts = true;
                    else if (v[0] == "hmc") o.config.sampler.nuts = false;
                    else return false;
                    return true;
                  },
                  "nuts (default) or plain hmc");
  cmd->add_option("--m", o.config.m_basis, "number of cubic B-splines (default 15)");
  cmd->add_option("--log-floor", o.config.log_floor,
                  "epsilon in log(max(c, eps)); 0 disables (default 0.5)");
}

void add_data_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--data", o.config.data_path, "observations CSV");
  cmd->add_option("--sites", o.config.sites_path, "sites CSV");
}

DataBundle load_bundle(const RunConfig& c) {
  require_path(c.data_path, "--data");
  require_path(c.sites_path, "--sites");
  const SiteSet sites = load_sites(c.sites_path);
  const ObservationSet obs = load_observations(c.data_path, c.log_floor, c.pollutant_whitelist);
  return DataBundle::build(obs, sites, c.m_basis);
}

int cmd_simulate(CliOptions& o) {
  o.config.mode = "simulate";
  o.config.validate();
  require_path(o.config.out_path, "--out");
  const SiteSet sites =
      o.config.sites_path.empty() ? preset_sites() : load_sites(o.config.sites_path);

  SimulationConfig sc;
  sc.paper_preset = o.config.preset == "paper";
  sc.k_true = o.config.k_true;
  sc.m_basis = o.config.m_basis;
  auto truth_rng = make_stream(o.config.sampler.seed, stream::truth);
  const SimulationTruth truth = simulate_truth(sites, sc, truth_rng);

  NoiseSpec noise{o.config.noise_frac};
  const ScheduleRule rule =
      o.config.schedule == "shared" ? ScheduleRule::shared : ScheduleRule::per_pollutant;
  auto obs_rng = make_stream(o.config.sampler.seed, stream::schedule);
  const SimulatedData sim = simulate_observations(truth, noise, rule, obs_rng);

  OutputStage stage(o.config.out_path, o.force);
  write_observations(sim.obs, stage.dir() / "observations.csv");
  write_sites(sites, stage.dir() / "sites.csv");
  write_truth_json(stage.dir() / "truth.json", truth, sim.sigma, o.config.noise_frac);
  write_metadata(stage.dir(), o.config);
  stage.commit();
  std::printf("simulated %zu records at %d sites (K_true=%d) -> %s\n", sim.obs.records.size(),
              sites.size(), truth.K, o.config.out_path.c_str());
  return 0;
}

int cmd_estimate_k(CliOptions& o) {
  o.config.mode = "estimate-k";
  o.config.validate();
  require_path(o.config.out_path, "--out");
  const DataBundle data = load_bundle(o.config);

  const EstimateKResult res = estimate_num_sources(data, o.config.hyper, o.config.sampler);

  OutputStage stage(o.config.out_path, o.force);
  write_ktrace_csv(stage.dir() / "ktrace.csv", res.trace);
  RunReport report;
  report.k_trace = res.trace;
  ChainReport cr;
  cr.warmup_divergences = res.divergences;
  cr.warnings = res.warnings;
  report.chains.push_back(cr);
  write_run_report(stage.dir(), report, res.k_star, res.divergences);
  write_metadata(stage.dir(), o.config);
  stage.commit();
  std::printf("estimated K* = %d after %zu batches -> %s\n", res.k_star, res.trace.size(),
              o.config.out_path.c_str());
  return 0;
}

int cmd_fit(CliOptions& o) {
  o.config.mode = "fit";
  o.config.validate();
  require_path(o.config.out_path, "--out");
  const DataBundle data = load_bundle(o.config);

  EstimateKResult est;
  RunReport report;
  int k_star = o.num_sources;
  const Vec* init = nullptr;
  if (k_star <= 0) {
    est = estimate_num_sources(data, o.config.hyper, o.config.sampler);
    k_star = est.k_star;
    report.k_trace = est.trace;
    init = &est.final_position;
  }
  const PosteriorDraws draws =
      run_chain(data, o.config.hyper, k_star, o.config.sampler, &report, init);

  OutputStage stage(o.config.out_path, o.force);
  write_draws(stage.dir(), draws, o.config);
  write_ktrace_csv(stage.dir() / "ktrace.csv", report.k_trace);
  write_run_report(stage.dir(), report, k_star, draws.divergences);
  write_metadata(stage.dir(), o.config);
  stage.commit();
  std::printf("K* = %d, %d retained draws (%ld divergent) -> %s\n", k_star, draws.total_draws(),
              draws.divergences, o.config.out_path.c_str());
  return 0;
}

int cmd_summarize(CliOptions& o) {
  o.config.mode = "summarize";
  require_path(o.config.draws_path, "--draws");
  require_path(o.config.out_path, "--out");
  const PosteriorDraws draws = read_draws(o.config.draws_path);

  OutputStage stage(o.config.out_path, o.force);
  const SummaryTable table = summarize(draws, o.block, o.prob);
  write_summary_csv(stage.dir() / ("summary_" + o.block + ".csv"), table);

  if (o.contributions) {
    const Mat h_medians = summarize(draws, "H", o.prob).medians();
    const Mat alpha = normalize_contributions(h_medians);
    std::vector<std::string> pollutants;
    for (int c = 0; c < draws.dims.C; ++c) pollutants.push_back("c" + std::to_string(c + 1));
    if (!o.config.data_path.empty()) {
      const ObservationSet obs = load_observations(o.config.data_path, o.config.log_floor);
      if (static_cast<int>(obs.pollutants.size()) == draws.dims.C) pollutants = obs.pollutants;
    }
    write_contributions_csv(stage.dir() / "contributions.csv", alpha, pollutants);
  }

  if (!o.band_sites.empty()) {
    if (o.config.data_path.empty() || o.config.sites_path.empty()) {
      throw ConfigError("--band-sites needs --data and --sites to rebuild the design");
    }
    const DataBundle data = load_bundle(o.config);
    std::vector<double> grid(365);
    std::iota(grid.begin(), grid.end(), 1.0);
    std::vector<int> sources = o.band_sources;
    if (sources.empty()) {
      sources.resize(static_cast<std::size_t>(draws.k_star));
      std::iota(sources.begin(), sources.end(), 1);
    }
    for (int site_1based : o.band_sites) {
      const int site = site_1based - 1;
      if (site < 0 || site >= data.n_sites()) {
        throw DataError("band site index " + std::to_string(site_1based) + " out of range");
      }
      for (int source_1based : sources) {
        const EmissionBand band =
            emission_band(draws, data, site, source_1based - 1, grid, o.prob);
        const std::string file = "band_site" + std::to_string(site_1based) + "_source" +
                                 std::to_string(source_1based) + ".csv";
        write_band_csv(stage.dir() / file,
                       data.sites.sites[static_cast<std::size_t>(site)].id, source_1based - 1,
                       band);
      }
    }
  }

  if (!o.dump_block.empty()) {
    write_draws_csv(stage.dir() / ("draws_" + o.dump_block + ".csv"), draws, o.dump_block);
  }
  write_metadata(stage.dir(), o.config);
  stage.commit();
  std::printf("summaries -> %s\n", o.config.out_path.c_str());
  return 0;
}

int cmd_coverage(CliOptions& o) {
  o.config.mode = "coverage";
  require_path(o.config.draws_path, "--draws");
  require_path(o.config.out_path, "--out");
  const PosteriorDraws draws = read_draws(o.config.draws_path);
  const DataBundle data = load_bundle(o.config);
  auto rng = make_stream(o.config.sampler.seed, stream::predictive);
  const Mat coverage = empirical_coverage(draws, data, rng, o.prob);

  OutputStage stage(o.config.out_path, o.force);
  write_coverage_csv(stage.dir() / "coverage.csv", coverage, data.sites, data.pollutants);
  write_metadata(stage.dir(), o.config);
  stage.commit();
  std::printf("coverage table -> %s\n", o.config.out_path.c_str());
  return 0;
}

int cmd_predict(CliOptions& o) {
  o.config.mode = "predict";
  require_path(o.config.draws_path, "--draws");
  require_path(o.config.out_path, "--out");
  const PosteriorDraws draws = read_draws(o.config.draws_path);
  const DataBundle data = load_bundle(o.config);

  std::vector<double> times;
  for (int d = o.day_start; d <= o.day_end; d += o.day_step) times.push_back(d);
  if (times.empty()) throw ConfigError("empty prediction grid");

  OutputStage stage(o.config.out_path, o.force);
  auto rng = make_stream(o.config.sampler.seed, stream::predictive);
  for (const auto& site_id : o.predict_sites) {
    const int site = data.sites.index_of(site_id);
    if (site < 0) throw DataError("unknown site '" + site_id + "'");
    const auto pred = predictive_draws(draws, data, site, times, rng, o.original_scale);
    write_predictions_csv(stage.dir() / ("predictions_" + site_id + ".csv"), site_id,
                          data.pollutants, times, 2021, pred, o.prob, o.original_scale);
  }
  write_metadata(stage.dir(), o.config);
  stage.commit();
  std::printf("predictions -> %s\n", o.config.out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian latent functional factor source apportionment"};
  app.require_subcommand(1);

  CliOptions o;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset with known truth");
  add_common_flags(sim, o);
  sim->add_option("--preset", o.config.preset, "paper|random (default paper)");
  sim->add_option("--k-true", o.config.k_true, "true number of sources (default 2)");
  sim->add_option("--noise-frac", o.config.noise_frac,
                  "sigma_c^2 as a fraction of the signal variance (default 0.1)");
  sim->add_option("--schedule", o.config.schedule,
                  "per-pollutant|shared (default per-pollutant)");
  sim->add_option("--sites", o.config.sites_path, "sites CSV (default: bundled 32-site layout)");
  sim->add_option("--m", o.config.m_basis, "number of cubic B-splines (default 15)");

  auto* est = app.add_subcommand("estimate-k", "estimate the number of sources");
  add_common_flags(est, o);
  add_data_flags(est, o);
  add_sampler_flags(est, o);

  auto* fit = app.add_subcommand("fit", "estimate K* then sample the posterior");
  add_common_flags(fit, o);
  add_data_flags(fit, o);
  add_sampler_flags(fit, o);
  fit->add_option("--num-sources", o.num_sources,
                  "skip the source-count search and fit at this K");

  auto* sum = app.add_subcommand("summarize", "medians, intervals and plot-ready tables");
  add_common_flags(sum, o);
  sum->add_option("--draws", o.config.draws_path, "fit output directory");
  sum->add_option("--block", o.block, "parameter block (default H)");
  sum->add_option("--prob", o.prob, "interval probability (default 0.95)");
  sum->add_flag("--contributions", o.contributions, "write the normalized contribution profile");
  sum->add_option("--band-sites", o.band_sites, "1-based site indices for emission bands");
  sum->add_option("--band-sources", o.band_sources, "1-based source indices (default: all)");
  sum->add_option("--dump-draws", o.dump_block, "export one block's raw draws as CSV");
  sum->add_option("--data", o.config.data_path, "observations CSV (for bands/pollutant names)");
  sum->add_option("--sites", o.config.sites_path, "sites CSV (for bands)");
  sum->add_option("--m", o.config.m_basis, "basis size used in the fit");
  sum->add_option("--log-floor", o.config.log_floor, "log floor used in the fit");

  auto* cov = app.add_subcommand("coverage", "empirical predictive coverage per site/pollutant");
  add_common_flags(cov, o);
  cov->add_option("--draws", o.config.draws_path, "fit output directory");
  add_data_flags(cov, o);
  cov->add_option("--prob", o.prob, "interval probability (default 0.95)");
  cov->add_option("--m", o.config.m_basis, "basis size used in the fit");
  cov->add_option("--log-floor", o.config.log_floor, "log floor used in the fit");

  auto* pred = app.add_subcommand("predict", "in-sample posterior predictive intervals");
  add_common_flags(pred, o);
  pred->add_option("--draws", o.config.draws_path, "fit output directory");
  add_data_flags(pred, o);
  pred->add_option("--site", o.predict_sites, "site id(s) to predict");
  pred->add_option("--day-start", o.day_start, "first day (default 1)");
  pred->add_option("--day-end", o.day_end, "last day (default 365)");
  pred->add_option("--day-step", o.day_step, "grid step (default 1)");
  pred->add_flag("--original-scale", o.original_scale, "report ug/m3 instead of log");
  pred->add_option("--prob", o.prob, "interval probability (default 0.95)");
  pred->add_option("--m", o.config.m_basis, "basis size used in the fit");
  pred->add_option("--log-floor", o.config.log_floor, "log floor used in the fit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!o.config_file.empty()) {
      // Start from the file's values, then re-parse so explicit flags win.
      RunConfig merged;
      apply_config_file(merged, o.config_file);
      o.config = merged;
      app.clear();
      try {
        app.parse(argc, argv);
      } catch (const CLI::ParseError& e) {
        return app.exit(e);
      }
    }

    if (sim->parsed()) return cmd_simulate(o);
    if (est->parsed()) return cmd_estimate_k(o);
    if (fit->parsed()) return cmd_fit(o);
    if (sum->parsed()) return cmd_summarize(o);
    if (cov->parsed()) return cmd_coverage(o);
    if (pred->parsed()) return cmd_predict(o);
    std::fprintf(stderr, "error: [config] no subcommand\n");
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: [config] %s\n", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: [data] %s\n", e.what());
    return kExitData;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: [numeric] %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: [numeric] %s\n", e.what());
    return kExitNumeric;
  }
}
