#include "bsa/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bsa/errors.hpp"

#ifndef BSA_VERSION
#define BSA_VERSION "0.0.0"
#endif

namespace bsa {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- small formatting/parsing helpers ---------------------------------------

namespace {

std::string fmt_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& s, const std::string& what, std::size_t row) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw DataError("row " + std::to_string(row) + ": cannot parse " + what + " '" + s + "'");
  }
  return v;
}

long parse_long(const std::string& s, const std::string& what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("cannot parse " + what + " '" + s + "'");
  }
  return v;
}

// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF.
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  const std::size_t n = content.size();
  auto end_field = [&]() {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < n) {
    const char ch = content[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < n && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n') {
      if (!field.empty() || !row.empty()) end_row();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
    ++i;
  }
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

bool is_leap(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

}  // namespace

int day_of_year(const std::string& iso_date, int* year_out) {
  if (iso_date.size() != 10 || iso_date[4] != '-' || iso_date[7] != '-') {
    throw DataError("date '" + iso_date + "' is not ISO-8601 (YYYY-MM-DD)");
  }
  const int year = static_cast<int>(parse_long(iso_date.substr(0, 4), "year"));
  const int month = static_cast<int>(parse_long(iso_date.substr(5, 2), "month"));
  const int day = static_cast<int>(parse_long(iso_date.substr(8, 2), "day"));
  static const int lens[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) throw DataError("date '" + iso_date + "': bad month");
  int len = lens[month - 1];
  if (month == 2 && is_leap(year)) len = 29;
  if (day < 1 || day > len) throw DataError("date '" + iso_date + "': bad day");
  int doy = day;
  for (int m = 1; m < month; ++m) {
    doy += lens[m - 1];
    if (m == 2 && is_leap(year)) ++doy;
  }
  if (year_out) *year_out = year;
  return doy;
}

std::string date_from_day(int year, int day) {
  static const int lens[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int m = 1;
  for (; m <= 12; ++m) {
    int len = lens[m - 1];
    if (m == 2 && is_leap(year)) len = 29;
    if (day <= len) break;
    day -= len;
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, m, day);
  return buf;
}

// ---- sites -------------------------------------------------------------------

SiteSet load_sites(const fs::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw DataError("sites file '" + path.string() + "' is empty");
  const std::vector<std::string> header = {"site_id", "lat", "lon", "elevation_m", "land_use"};
  if (rows[0] != header) {
    throw DataError("sites file must start with header site_id,lat,lon,elevation_m,land_use");
  }
  SiteSet out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 5) {
      throw DataError("sites row " + std::to_string(r + 1) + ": expected 5 fields");
    }
    Site s;
    s.id = row[0];
    s.lat = parse_double(row[1], "lat", r + 1);
    s.lon = parse_double(row[2], "lon", r + 1);
    s.elevation_m = parse_double(row[3], "elevation_m", r + 1);
    s.land_use = parse_land_use(row[4]);
    out.sites.push_back(std::move(s));
  }
  out.validate();
  return out;
}

void write_sites(const SiteSet& sites, const fs::path& path) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw DataError("cannot write '" + path.string() + "'");
  outf << "site_id,lat,lon,elevation_m,land_use\n";
  for (const auto& s : sites.sites) {
    outf << csv_escape(s.id) << ',' << fmt_double(s.lat) << ',' << fmt_double(s.lon) << ','
         << fmt_double(s.elevation_m) << ',' << land_use_name(s.land_use) << '\n';
  }
}

// ---- observations --------------------------------------------------------------

ObservationSet load_observations(const fs::path& path, double log_floor,
                                 const std::vector<std::string>& pollutant_whitelist) {
  if (log_floor < 0.0) throw ConfigError("log floor must be nonnegative");
  const auto rows = read_csv(path);
  const std::vector<std::string> header = {"site_id", "date", "pollutant", "concentration_ugm3"};
  if (rows.empty() || rows[0] != header) {
    throw DataError(
        "observations file must start with header site_id,date,pollutant,concentration_ugm3");
  }
  if (rows.size() == 1) {
    throw DataError("observations file '" + path.string() + "' has no records");
  }
  std::set<std::string> whitelist(pollutant_whitelist.begin(), pollutant_whitelist.end());

  ObservationSet out;
  out.log_floor = log_floor;
  std::set<std::tuple<std::string, int, std::string>> seen;
  std::set<std::string> pol_seen;
  int year = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 4) {
      throw DataError("observations row " + std::to_string(r + 1) + ": expected 4 fields");
    }
    ObservationRecord rec;
    rec.site_id = row[0];
    int row_year = 0;
    rec.day = day_of_year(row[1], &row_year);
    if (year == 0) {
      year = row_year;
    } else if (row_year != year) {
      throw DataError("observations row " + std::to_string(r + 1) +
                      ": all records must fall in one calendar year");
    }
    rec.pollutant = row[2];
    if (!whitelist.empty() && whitelist.count(rec.pollutant) == 0) {
      throw DataError("observations row " + std::to_string(r + 1) + ": unknown pollutant code '" +
                      rec.pollutant + "'");
    }
    if (row[3].empty()) {
      rec.missing = true;
    } else {
      rec.concentration = parse_double(row[3], "concentration", r + 1);
      if (rec.concentration < 0.0) {
        throw DataError("observations row " + std::to_string(r + 1) +
                        ": negative concentration");
      }
      if (log_floor > 0.0) {
        rec.log_value = std::log(std::max(rec.concentration, log_floor));
      } else {
        if (!(rec.concentration > 0.0)) {
          throw DataError("observations row " + std::to_string(r + 1) +
                          ": zero concentration needs a positive log floor");
        }
        rec.log_value = std::log(rec.concentration);
      }
    }
    if (!seen.insert({rec.site_id, rec.day, rec.pollutant}).second) {
      throw DataError("observations row " + std::to_string(r + 1) + ": duplicate (site_id=" +
                      rec.site_id + ", date=" + row[1] + ", pollutant=" + rec.pollutant + ")");
    }
    if (pol_seen.insert(rec.pollutant).second) out.pollutants.push_back(rec.pollutant);
    out.records.push_back(std::move(rec));
  }
  out.year = year;
  out.days_in_year = is_leap(year) ? 366 : 365;
  return out;
}

void write_observations(const ObservationSet& obs, const fs::path& path) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw DataError("cannot write '" + path.string() + "'");
  outf << "site_id,date,pollutant,concentration_ugm3\n";
  for (const auto& r : obs.records) {
    outf << csv_escape(r.site_id) << ',' << date_from_day(obs.year, r.day) << ','
         << csv_escape(r.pollutant) << ',' << (r.missing ? "" : fmt_double(r.concentration))
         << '\n';
  }
}

std::map<std::string, int> schedule_counts(const ObservationSet& obs) {
  std::map<std::string, std::set<int>> days;
  for (const auto& r : obs.records) days[r.site_id].insert(r.day);
  std::map<std::string, int> out;
  for (const auto& [id, d] : days) out[id] = static_cast<int>(d.size());
  return out;
}

// ---- config ---------------------------------------------------------------------

void RunConfig::validate() const {
  sampler.validate();
  hyper.validate();
  if (m_basis < 4) throw ConfigError("m_basis must be at least 4");
  if (log_floor < 0.0) throw ConfigError("log_floor must be nonnegative");
  if (!(noise_frac > 0.0) || noise_frac > 1.0) throw ConfigError("noise_frac must lie in (0,1]");
  if (preset != "paper" && preset != "random") throw ConfigError("preset must be paper|random");
  if (schedule != "per-pollutant" && schedule != "shared") {
    throw ConfigError("schedule must be per-pollutant|shared");
  }
  if (k_true < 1) throw ConfigError("k_true must be at least 1");
}

namespace {

void set_config_key(RunConfig& c, const std::string& key, const std::string& value) {
  auto as_double = [&](const char* what) {
    try {
      return parse_double(value, what, 0);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  };
  auto as_int = [&](const char* what) { return static_cast<int>(parse_long(value, what)); };
  if (key == "n_iter") c.sampler.n_iter = as_int(key.c_str());
  else if (key == "burn_in") c.sampler.burn_in = as_int(key.c_str());
  else if (key == "k_init") c.sampler.k_init = as_int(key.c_str());
  else if (key == "batch_size") c.sampler.batch_size = as_int(key.c_str());
  else if (key == "zeta") c.sampler.zeta = as_double(key.c_str());
  else if (key == "target_accept") c.sampler.target_accept = as_double(key.c_str());
  else if (key == "max_tree_depth") c.sampler.max_tree_depth = as_int(key.c_str());
  else if (key == "seed") c.sampler.seed = static_cast<std::uint64_t>(parse_long(value, key));
  else if (key == "n_chains") c.sampler.n_chains = as_int(key.c_str());
  else if (key == "algorithm") {
    if (value == "nuts") c.sampler.nuts = true;
    else if (value == "hmc") c.sampler.nuts = false;
    else throw ConfigError("algorithm must be nuts|hmc");
  } else if (key == "hmc_steps") c.sampler.hmc_steps = as_int(key.c_str());
  else if (key == "gp_param") {
    if (value == "whitened") c.sampler.gp = GpParam::whitened;
    else if (value == "centered") c.sampler.gp = GpParam::centered;
    else throw ConfigError("gp_param must be whitened|centered");
  } else if (key == "nu") c.hyper.nu = as_double(key.c_str());
  else if (key == "a1") c.hyper.a1 = as_double(key.c_str());
  else if (key == "a2") c.hyper.a2 = as_double(key.c_str());
  else if (key == "a_beta") c.hyper.a_beta = as_double(key.c_str());
  else if (key == "b_beta") c.hyper.b_beta = as_double(key.c_str());
  else if (key == "a_rho") c.hyper.a_rho = as_double(key.c_str());
  else if (key == "b_rho") c.hyper.b_rho = as_double(key.c_str());
  else if (key == "alpha0") c.hyper.alpha0 = as_double(key.c_str());
  else if (key == "m_basis") c.m_basis = as_int(key.c_str());
  else if (key == "log_floor") c.log_floor = as_double(key.c_str());
  else if (key == "pollutant_whitelist") {
    c.pollutant_whitelist.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) c.pollutant_whitelist.push_back(item);
    }
  } else if (key == "noise_frac") c.noise_frac = as_double(key.c_str());
  else if (key == "preset") c.preset = value;
  else if (key == "k_true") c.k_true = as_int(key.c_str());
  else if (key == "schedule") c.schedule = value;
  else if (key == "data") c.data_path = value;
  else if (key == "sites") c.sites_path = value;
  else if (key == "draws") c.draws_path = value;
  else if (key == "out") c.out_path = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_file(RunConfig& config, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream os;
  os << "a1=" << fmt_double(c.hyper.a1) << '\n'
     << "a2=" << fmt_double(c.hyper.a2) << '\n'
     << "a_beta=" << fmt_double(c.hyper.a_beta) << '\n'
     << "a_rho=" << fmt_double(c.hyper.a_rho) << '\n'
     << "algorithm=" << (c.sampler.nuts ? "nuts" : "hmc") << '\n'
     << "alpha0=" << fmt_double(c.hyper.alpha0) << '\n'
     << "b_beta=" << fmt_double(c.hyper.b_beta) << '\n'
     << "b_rho=" << fmt_double(c.hyper.b_rho) << '\n'
     << "batch_size=" << c.sampler.batch_size << '\n'
     << "burn_in=" << c.sampler.burn_in << '\n'
     << "data=" << c.data_path << '\n'
     << "draws=" << c.draws_path << '\n'
     << "gp_param=" << (c.sampler.gp == GpParam::whitened ? "whitened" : "centered") << '\n'
     << "hmc_steps=" << c.sampler.hmc_steps << '\n'
     << "k_init=" << c.sampler.k_init << '\n'
     << "k_true=" << c.k_true << '\n'
     << "log_floor=" << fmt_double(c.log_floor) << '\n'
     << "m_basis=" << c.m_basis << '\n'
     << "max_tree_depth=" << c.sampler.max_tree_depth << '\n'
     << "mode=" << c.mode << '\n'
     << "n_chains=" << c.sampler.n_chains << '\n'
     << "n_iter=" << c.sampler.n_iter << '\n'
     << "noise_frac=" << fmt_double(c.noise_frac) << '\n'
     << "nu=" << fmt_double(c.hyper.nu) << '\n'
     << "out=" << c.out_path << '\n'
     << "pollutant_whitelist=";
  for (std::size_t i = 0; i < c.pollutant_whitelist.size(); ++i) {
    if (i) os << ',';
    os << c.pollutant_whitelist[i];
  }
  os << '\n'
     << "preset=" << c.preset << '\n'
     << "schedule=" << c.schedule << '\n'
     << "seed=" << c.sampler.seed << '\n'
     << "sites=" << c.sites_path << '\n'
     << "target_accept=" << fmt_double(c.sampler.target_accept) << '\n'
     << "zeta=" << fmt_double(c.sampler.zeta) << '\n';
  return os.str();
}

std::string config_hash(const RunConfig& c) {
  const std::string s = canonical_config(c);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- staged outputs ---------------------------------------------------------

OutputStage::OutputStage(fs::path final_dir, bool force)
    : final_(std::move(final_dir)), staging_(final_.string() + ".partial") {
  if (fs::exists(final_) && !force) {
    throw ConfigError("output path '" + final_.string() + "' exists (use --force to replace)");
  }
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

OutputStage::~OutputStage() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void OutputStage::commit() {
  fs::remove_all(final_);
  fs::rename(staging_, final_);
  committed_ = true;
}

// ---- JSON outputs -----------------------------------------------------------

namespace {

json config_to_json(const RunConfig& c) {
  json j;
  std::istringstream is(canonical_config(c));
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

void dump_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_metadata(const fs::path& dir, const RunConfig& config) {
  json j;
  j["command"] = config.mode;
  j["config"] = config_to_json(config);
  j["config_hash"] = config_hash(config);
  j["seed"] = config.sampler.seed;
  j["versions"] = {{"bsa", BSA_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)}};
  dump_json(j, dir / "metadata.json");
}

// ---- draws container ---------------------------------------------------------

namespace {
constexpr char kDrawsMagic[8] = {'B', 'S', 'A', 'D', 'R', 'A', 'W', 'S'};
}

void write_draws(const fs::path& dir, const PosteriorDraws& draws, const RunConfig& config) {
  const fs::path bin_path = dir / "draws.bin";
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw DataError("cannot write '" + bin_path.string() + "'");
  bin.write(kDrawsMagic, sizeof(kDrawsMagic));
  const std::uint32_t version = 1;
  bin.write(reinterpret_cast<const char*>(&version), sizeof(version));

  json blocks = json::array();
  std::uint64_t offset = sizeof(kDrawsMagic) + sizeof(version);
  for (const auto& b : draws.blocks) {
    const std::uint64_t bytes = static_cast<std::uint64_t>(b.data.size()) * sizeof(double);
    blocks.push_back({{"name", b.name},
                      {"rows", b.rows},
                      {"cols", b.cols},
                      {"offset", offset},
                      {"count", b.data.size()}});
    bin.write(reinterpret_cast<const char*>(b.data.data()),
              static_cast<std::streamsize>(bytes));
    offset += bytes;
  }
  if (!bin) throw DataError("short write to '" + bin_path.string() + "'");
  bin.close();

  json index;
  index["format"] = "bsa-draws";
  index["version"] = version;
  index["endianness"] = "little";
  index["layout"] = "column-major";  // all draws of a coordinate are contiguous
  index["draws_per_chain"] = draws.draws_per_chain;
  index["n_chains"] = draws.n_chains;
  index["total_draws"] = draws.total_draws();
  index["k_star"] = draws.k_star;
  index["seed"] = draws.seed;
  index["divergences"] = draws.divergences;
  index["config_hash"] = config_hash(config);
  index["dims"] = {{"K", draws.dims.K}, {"M", draws.dims.M}, {"C", draws.dims.C},
                   {"p", draws.dims.p}, {"N", draws.dims.N}};
  index["blocks"] = blocks;
  index["config"] = config_to_json(config);
  dump_json(index, dir / "draws_index.json");
}

PosteriorDraws read_draws(const fs::path& dir) {
  const fs::path index_path = dir / "draws_index.json";
  std::ifstream idx(index_path);
  if (!idx) throw DataError("cannot open '" + index_path.string() + "'");
  json index = json::parse(idx, nullptr, true);
  if (index.value("format", "") != "bsa-draws") {
    throw DataError("'" + index_path.string() + "' is not a draws index");
  }

  PosteriorDraws out;
  out.draws_per_chain = index["draws_per_chain"].get<int>();
  out.n_chains = index["n_chains"].get<int>();
  out.k_star = index["k_star"].get<int>();
  out.seed = index["seed"].get<std::uint64_t>();
  out.divergences = index["divergences"].get<long>();
  out.config_hash = index["config_hash"].get<std::string>();
  out.dims.K = index["dims"]["K"].get<int>();
  out.dims.M = index["dims"]["M"].get<int>();
  out.dims.C = index["dims"]["C"].get<int>();
  out.dims.p = index["dims"]["p"].get<int>();
  out.dims.N = index["dims"]["N"].get<int>();

  const fs::path bin_path = dir / "draws.bin";
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw DataError("cannot open '" + bin_path.string() + "'");
  char magic[8];
  bin.read(magic, sizeof(magic));
  if (!bin || std::memcmp(magic, kDrawsMagic, sizeof(magic)) != 0) {
    throw DataError("'" + bin_path.string() + "' is not a draws container");
  }
  const int total = out.total_draws();
  for (const auto& jb : index["blocks"]) {
    DrawBlock b;
    b.name = jb["name"].get<std::string>();
    b.rows = jb["rows"].get<int>();
    b.cols = jb["cols"].get<int>();
    const auto count = jb["count"].get<std::int64_t>();
    if (count != static_cast<std::int64_t>(total) * b.rows * b.cols) {
      throw DataError("draws block '" + b.name + "': inconsistent element count");
    }
    b.data.resize(total, b.rows * b.cols);
    bin.seekg(static_cast<std::streamoff>(jb["offset"].get<std::uint64_t>()));
    bin.read(reinterpret_cast<char*>(b.data.data()),
             static_cast<std::streamsize>(count * static_cast<std::int64_t>(sizeof(double))));
    if (!bin) throw DataError("draws block '" + b.name + "': truncated file");
    out.blocks.push_back(std::move(b));
  }
  return out;
}

void write_draws_csv(const fs::path& path, const PosteriorDraws& draws, const std::string& block) {
  const auto& b = draws.block(block);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "draw";
  for (int j = 0; j < b.rows * b.cols; ++j) {
    out << ',' << b.name << '[' << (j % b.rows + 1) << ',' << (j / b.rows + 1) << ']';
  }
  out << '\n';
  for (int t = 0; t < draws.total_draws(); ++t) {
    out << t + 1;
    for (int j = 0; j < b.rows * b.cols; ++j) out << ',' << fmt_double(b.data(t, j));
    out << '\n';
  }
}

// ---- reports and tables --------------------------------------------------------

void write_ktrace_csv(const fs::path& path, const std::vector<KTracePoint>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "batch,k_run,k_active\n";
  for (const auto& t : trace) out << t.batch << ',' << t.k_run << ',' << t.k_active << '\n';
}

void write_run_report(const fs::path& dir, const RunReport& report, int k_star,
                      long divergences) {
  json j;
  j["k_star"] = k_star;
  j["divergences"] = divergences;
  json trace = json::array();
  for (const auto& t : report.k_trace) {
    trace.push_back({{"batch", t.batch}, {"k_run", t.k_run}, {"k_active", t.k_active}});
  }
  j["k_trace"] = trace;
  json chains = json::array();
  for (const auto& c : report.chains) {
    chains.push_back({{"step_size", c.step_size},
                      {"mean_accept", c.mean_accept},
                      {"divergences", c.divergences},
                      {"warmup_divergences", c.warmup_divergences},
                      {"warnings", c.warnings}});
  }
  j["chains"] = chains;
  j["max_split_rhat"] = report.max_split_rhat;
  j["wall_seconds"] = report.wall_seconds;
  dump_json(j, dir / "run_report.json");
}

void write_summary_csv(const fs::path& path, const SummaryTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "block,row,col,median,lo,hi\n";
  for (const auto& e : table.entries) {
    out << table.block << ',' << e.row << ',' << e.col << ',' << fmt_double(e.median) << ','
        << fmt_double(e.lo) << ',' << fmt_double(e.hi) << '\n';
  }
}

void write_contributions_csv(const fs::path& path, const Mat& alpha,
                             const std::vector<std::string>& pollutants) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "pollutant,source,share\n";
  for (Eigen::Index c = 0; c < alpha.cols(); ++c) {
    for (Eigen::Index k = 0; k < alpha.rows(); ++k) {
      out << csv_escape(pollutants[static_cast<std::size_t>(c)]) << ',' << k + 1 << ','
          << fmt_double(alpha(k, c)) << '\n';
    }
  }
}

void write_band_csv(const fs::path& path, const std::string& site_id, int source,
                    const EmissionBand& band) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "site_id,source,t,median,lo,hi\n";
  for (std::size_t j = 0; j < band.times.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    out << csv_escape(site_id) << ',' << source + 1 << ',' << fmt_double(band.times[j]) << ','
        << fmt_double(band.median[i]) << ',' << fmt_double(band.lo[i]) << ','
        << fmt_double(band.hi[i]) << '\n';
  }
}

void write_coverage_csv(const fs::path& path, const Mat& coverage, const SiteSet& sites,
                        const std::vector<std::string>& pollutants) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "site_id,pollutant,coverage\n";
  for (Eigen::Index i = 0; i < coverage.rows(); ++i) {
    for (Eigen::Index c = 0; c < coverage.cols(); ++c) {
      if (std::isnan(coverage(i, c))) continue;
      out << csv_escape(sites.sites[static_cast<std::size_t>(i)].id) << ','
          << csv_escape(pollutants[static_cast<std::size_t>(c)]) << ','
          << fmt_double(coverage(i, c)) << '\n';
    }
  }
}

void write_truth_json(const fs::path& path, const SimulationTruth& truth, const Vec& sigma,
                      double noise_frac) {
  json j;
  j["k_true"] = truth.K;
  j["m_basis"] = truth.M;
  j["pollutants"] = truth.pollutants;
  j["lambda"] = mat_to_json(truth.lambda);
  j["f"] = mat_to_json(truth.f);
  j["beta"] = mat_to_json(truth.beta);
  j["w"] = mat_to_json(truth.w);
  j["rho"] = vec_to_json(truth.rho);
  j["gamma"] = mat_to_json(truth.gamma);
  j["H"] = mat_to_json(truth.H);
  j["sigma"] = vec_to_json(sigma);
  j["noise_frac"] = noise_frac;
  json g = json::array();
  for (const auto& gk : truth.g) g.push_back(mat_to_json(gk));
  j["g"] = g;
  json site_ids = json::array();
  for (const auto& s : truth.sites.sites) site_ids.push_back(s.id);
  j["site_ids"] = site_ids;
  dump_json(j, path);
}

void write_predictions_csv(const fs::path& path, const std::string& site_id,
                           const std::vector<std::string>& pollutants,
                           const std::vector<double>& times, int year,
                           const std::vector<Mat>& pred, double prob, bool original_scale) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "site_id,date,pollutant,scale,median,lo,hi\n";
  const double tail = (1.0 - prob) / 2.0;
  for (std::size_t c = 0; c < pred.size(); ++c) {
    for (std::size_t j = 0; j < times.size(); ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      out << csv_escape(site_id) << ','
          << date_from_day(year, static_cast<int>(times[j])) << ','
          << csv_escape(pollutants[c]) << ',' << (original_scale ? "ugm3" : "log") << ','
          << fmt_double(quantile(pred[c].col(col), 0.5)) << ','
          << fmt_double(quantile(pred[c].col(col), tail)) << ','
          << fmt_double(quantile(pred[c].col(col), 1.0 - tail)) << '\n';
    }
  }
}

}  // namespace bsa
