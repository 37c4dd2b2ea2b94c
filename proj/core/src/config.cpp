#include "raincop/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>

#include "raincop/error.hpp"
#include "raincop/text.hpp"

namespace raincop {

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys{
      // paths
      "locations", "rainfall", "features", "marginals", "coefficients",
      "ensemble", "out",
      // run
      "seed", "threads",
      // distance and kernel
      "a", "topo_scale", "coord_scale", "blend_mode", "nu", "theta",
      // scoring and search
      "beta", "m", "theta_lower", "theta_upper", "grid", "tol",
      "day_subsample", "location_subsample",
      // marginal fitting
      "transform", "max_iterations",
      // simulation and diagnostics
      "members", "days", "tau_grid", "q_levels", "ecdf_levels", "center",
      "rank_bins", "variogram_p",
      // synthetic fixtures
      "n_locations", "n_days", "theta_true", "p", "mu", "phi", "lat_min",
      "lat_max", "lon_min", "lon_max", "elev_min", "elev_max", "start_date",
      "synth_marginals", "feature_dim"};
  return keys;
}

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  std::size_t row = 0;
  const auto& keys = known_keys();
  while (std::getline(in, line)) {
    ++row;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string_view body = text::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ": line " + std::to_string(row);
    if (eq == std::string_view::npos) {
      throw IngestionError(where + ": expected key=value");
    }
    const std::string key(text::trim(body.substr(0, eq)));
    const std::string value(text::trim(body.substr(eq + 1)));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw IngestionError(where + ", key '" + key + "': unknown key");
    }
    cfg.values_[key] = value;
    cfg.origin_[key] = where;
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open config '" + path.string() + "'");
  return parse(in, path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw IngestionError("command line, key '" + key + "': unknown key");
  }
  values_[key] = value;
  origin_[key] = "command line";
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

void RunConfig::bad(const std::string& key, const std::string& why) const {
  const auto it = origin_.find(key);
  const std::string where = it == origin_.end() ? "config" : it->second;
  throw IngestionError(where + ", key '" + key + "': " + why);
}

std::optional<std::string> RunConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string RunConfig::get_string(const std::string& key,
                                  const std::string& fallback) const {
  return get_string(key).value_or(fallback);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto s = get_string(key);
  if (!s) return fallback;
  const auto v = text::parse_double(*s);
  if (!v || !std::isfinite(*v)) bad(key, "'" + *s + "' is not a finite number");
  return *v;
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
  const auto s = get_string(key);
  if (!s) return fallback;
  const auto v = text::parse_int(*s);
  if (!v) bad(key, "'" + *s + "' is not an integer");
  return *v;
}

std::uint64_t RunConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto s = get_string(key);
  if (!s) return fallback;
  const auto v = text::parse_int(*s);
  if (!v || *v < 0) bad(key, "'" + *s + "' is not a nonnegative integer");
  return static_cast<std::uint64_t>(*v);
}

std::optional<long long> RunConfig::get_count_or_all(const std::string& key) const {
  const auto s = get_string(key);
  if (!s || *s == "all") return std::nullopt;
  const auto v = text::parse_int(*s);
  if (!v || *v < 1) bad(key, "'" + *s + "' is neither a positive count nor 'all'");
  return *v;
}

std::vector<double> RunConfig::get_doubles(const std::string& key,
                                           const std::vector<double>& fallback) const {
  const auto s = get_string(key);
  if (!s) return fallback;
  std::vector<double> out;
  for (const auto& token : text::split_csv(*s)) {
    const auto v = text::parse_double(token);
    if (!v || !std::isfinite(*v)) bad(key, "'" + token + "' is not a finite number");
    out.push_back(*v);
  }
  return out;
}

std::filesystem::path RunConfig::require_path(const std::string& key) const {
  const auto s = get_string(key);
  if (!s || s->empty()) {
    throw IngestionError("missing required setting '" + key + "'");
  }
  const std::filesystem::path p(*s);
  if (!std::filesystem::exists(p)) {
    throw IngestionError("'" + key + "' path '" + p.string() + "' does not exist");
  }
  return p;
}

}  // namespace raincop
