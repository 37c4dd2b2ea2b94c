#include "raincop/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include "json.hpp"
#include <sstream>
#include <unordered_map>

#include "raincop/error.hpp"
#include "raincop/text.hpp"

namespace raincop::io {
namespace {

using text::format_double;
using json = nlohmann::ordered_json;

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source)
      : in_(in), source_(std::move(source)) {}

  // Next non-blank record; false at end of input.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++row_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (text::trim(line).empty()) continue;
      fields = text::split_csv(line);
      return true;
    }
    return false;
  }

  std::vector<std::string> header() {
    std::vector<std::string> fields;
    if (!next(fields)) fail(1, "", "file is empty");
    return fields;
  }

  [[noreturn]] void fail(std::size_t row, const std::string& column,
                         const std::string& message) const {
    std::string where = source_ + ": row " + std::to_string(row);
    if (!column.empty()) where += ", column '" + column + "'";
    throw IngestionError(where + ": " + message);
  }
  [[noreturn]] void fail(const std::string& column, const std::string& message) const {
    fail(row_, column, message);
  }

  double number(const std::string& token, const std::string& column) const {
    const auto v = text::parse_double(token);
    if (!v) fail(column, "'" + token + "' is not a number");
    if (!std::isfinite(*v)) fail(column, "value must be finite, got '" + token + "'");
    return *v;
  }

  void expect_width(const std::vector<std::string>& fields, std::size_t width) const {
    if (fields.size() != width) {
      fail("", "expected " + std::to_string(width) + " fields, found " +
                   std::to_string(fields.size()));
    }
  }

  std::size_t row() const { return row_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t row_ = 0;
};

void expect_header(CsvReader& csv, const std::vector<std::string>& got,
                   const std::vector<std::string>& want) {
  for (std::size_t k = 0; k < want.size(); ++k) {
    if (k >= got.size() || got[k] != want[k]) {
      csv.fail(1, k < got.size() ? got[k] : "", "expected header column " +
                                                    std::to_string(k + 1) + " '" +
                                                    want[k] + "'");
    }
  }
}

// Maps (date, loc) keys onto observation rows.
class CellIndex {
 public:
  explicit CellIndex(const RainPanel& panel) : n_(panel.n_locations()) {
    for (std::size_t t = 0; t < panel.day_labels.size(); ++t) {
      days_.emplace(panel.day_labels[t], static_cast<Eigen::Index>(t));
    }
    for (std::size_t i = 0; i < panel.location_ids.size(); ++i) {
      locs_.emplace(panel.location_ids[i], static_cast<Eigen::Index>(i));
    }
  }
  Eigen::Index day(CsvReader& csv, const std::string& label) const {
    const auto it = days_.find(label);
    if (it == days_.end()) csv.fail("date", "date '" + label + "' is not in the rainfall panel");
    return it->second;
  }
  Eigen::Index loc(CsvReader& csv, const std::string& id) const {
    const auto it = locs_.find(id);
    if (it == locs_.end()) csv.fail("loc", "location '" + id + "' is not in the rainfall panel");
    return it->second;
  }
  Eigen::Index row(CsvReader& csv, const std::string& date, const std::string& id) const {
    const Eigen::Index t = day(csv, date);
    return observation_row(loc(csv, id), t, n_);
  }

 private:
  Eigen::Index n_;
  std::unordered_map<std::string, Eigen::Index> days_;
  std::unordered_map<std::string, Eigen::Index> locs_;
};

template <typename Reader>
auto from_path(const std::filesystem::path& path, Reader&& reader) {
  std::ifstream in = open_input(path);
  return reader(in, path.string());
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json subsample_json(const std::optional<Eigen::Index>& count,
                    const std::vector<Eigen::Index>& explicit_list) {
  if (!explicit_list.empty()) return json(explicit_list.size());
  if (count) return json(*count);
  return json("all");
}

}  // namespace

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  return in;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IngestionError("failed writing '" + path.string() + "'");
}

LocationTable read_locations(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  const std::vector<std::string> cols{"id", "lat", "lon", "elev"};
  expect_header(csv, csv.header(), cols);
  LocationTable table;
  std::vector<std::string> f;
  std::map<std::string, std::size_t> seen;
  while (csv.next(f)) {
    csv.expect_width(f, cols.size());
    if (f[0].empty()) csv.fail("id", "empty location id");
    if (const auto [it, fresh] = seen.emplace(f[0], csv.row()); !fresh) {
      csv.fail("id", "duplicate id '" + f[0] + "' (first seen on row " +
                         std::to_string(it->second) + ")");
    }
    Location loc{f[0], csv.number(f[1], "lat"), csv.number(f[2], "lon"),
                 csv.number(f[3], "elev")};
    if (std::abs(loc.lat) > 90.0) csv.fail("lat", "latitude outside [-90, 90]");
    if (std::abs(loc.lon) > 180.0) csv.fail("lon", "longitude outside [-180, 180]");
    table.rows.push_back(std::move(loc));
  }
  if (table.size() < 2) csv.fail(csv.row(), "", "need at least two locations");
  return table;
}

LocationTable read_locations(const std::filesystem::path& path) {
  return from_path(path, [](std::istream& in, const std::string& s) {
    return read_locations(in, s);
  });
}

void write_locations(std::ostream& out, const LocationTable& locs) {
  out << "id,lat,lon,elev\n";
  for (const auto& l : locs.rows) {
    out << l.id << ',' << format_double(l.lat) << ',' << format_double(l.lon)
        << ',' << format_double(l.elev) << '\n';
  }
}

RainPanel read_rainfall(std::istream& in, const std::string& source,
                        const LocationTable& locs) {
  CsvReader csv(in, source);
  std::vector<std::string> want{"date"};
  for (const auto& l : locs.rows) want.push_back(l.id);
  const std::vector<std::string> header = csv.header();
  expect_header(csv, header, want);
  csv.expect_width(header, want.size());

  RainPanel panel;
  panel.location_ids = locs.ids();
  std::vector<std::vector<double>> days;
  std::map<std::string, std::size_t> seen;
  std::vector<std::string> f;
  while (csv.next(f)) {
    csv.expect_width(f, want.size());
    if (f[0].empty()) csv.fail("date", "empty date");
    if (const auto [it, fresh] = seen.emplace(f[0], csv.row()); !fresh) {
      csv.fail("date", "duplicate date '" + f[0] + "'");
    }
    std::vector<double> row(locs.size());
    for (std::size_t i = 0; i < locs.size(); ++i) {
      if (f[i + 1].empty()) csv.fail(want[i + 1], "missing value");
      const auto v = text::parse_double(f[i + 1]);
      if (!v) csv.fail(want[i + 1], "'" + f[i + 1] + "' is not a number");
      if (std::isnan(*v) || !std::isfinite(*v)) {
        csv.fail(want[i + 1], "non-finite rainfall '" + f[i + 1] + "'");
      }
      if (*v < 0.0) csv.fail(want[i + 1], "negative rainfall " + f[i + 1]);
      row[i] = *v == 0.0 ? 0.0 : *v;
    }
    panel.day_labels.push_back(f[0]);
    days.push_back(std::move(row));
  }
  if (days.empty()) csv.fail(csv.row(), "", "no data rows");
  panel.values.resize(static_cast<Eigen::Index>(locs.size()),
                      static_cast<Eigen::Index>(days.size()));
  for (std::size_t t = 0; t < days.size(); ++t) {
    for (std::size_t i = 0; i < locs.size(); ++i) {
      panel.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
          days[t][i];
    }
  }
  return panel;
}

RainPanel read_rainfall(const std::filesystem::path& path, const LocationTable& locs) {
  return from_path(path, [&](std::istream& in, const std::string& s) {
    return read_rainfall(in, s, locs);
  });
}

void write_rainfall(std::ostream& out, const RainPanel& panel) {
  out << "date";
  for (const auto& id : panel.location_ids) out << ',' << id;
  out << '\n';
  for (Eigen::Index t = 0; t < panel.n_days(); ++t) {
    out << panel.day_labels[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < panel.n_locations(); ++i) {
      out << ',' << format_double(panel.values(i, t));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_features(std::istream& in, const std::string& source,
                              const RainPanel& panel) {
  CsvReader csv(in, source);
  const std::vector<std::string> header = csv.header();
  expect_header(csv, header, {"date", "loc"});
  if (header.size() < 3) csv.fail(1, "", "no feature columns");
  const auto d = static_cast<Eigen::Index>(header.size() - 2);
  const Eigen::Index rows = panel.n_locations() * panel.n_days();
  Eigen::MatrixXd x(rows, d);
  std::vector<std::size_t> filled(static_cast<std::size_t>(rows), 0);
  const CellIndex index(panel);
  std::vector<std::string> f;
  while (csv.next(f)) {
    csv.expect_width(f, header.size());
    const Eigen::Index r = index.row(csv, f[0], f[1]);
    if (filled[static_cast<std::size_t>(r)] != 0) {
      csv.fail("loc", "duplicate row for (" + f[0] + ", " + f[1] + "), first on row " +
                          std::to_string(filled[static_cast<std::size_t>(r)]));
    }
    filled[static_cast<std::size_t>(r)] = csv.row();
    for (Eigen::Index k = 0; k < d; ++k) {
      const auto& col = header[static_cast<std::size_t>(k + 2)];
      x(r, k) = csv.number(f[static_cast<std::size_t>(k + 2)], col);
    }
  }
  for (Eigen::Index t = 0; t < panel.n_days(); ++t) {
    for (Eigen::Index i = 0; i < panel.n_locations(); ++i) {
      if (filled[static_cast<std::size_t>(observation_row(i, t, panel.n_locations()))] == 0) {
        csv.fail(csv.row(), "loc",
                 "no feature row for (" + panel.day_labels[static_cast<std::size_t>(t)] +
                     ", " + panel.location_ids[static_cast<std::size_t>(i)] + ")");
      }
    }
  }
  return x;
}

Eigen::MatrixXd read_features(const std::filesystem::path& path,
                              const RainPanel& panel) {
  return from_path(path, [&](std::istream& in, const std::string& s) {
    return read_features(in, s, panel);
  });
}

void write_features(std::ostream& out, const Eigen::MatrixXd& features,
                    const RainPanel& panel) {
  out << "date,loc";
  for (Eigen::Index k = 0; k < features.cols(); ++k) out << ",f" << k;
  out << '\n';
  const Eigen::Index n = panel.n_locations();
  for (Eigen::Index t = 0; t < panel.n_days(); ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out << panel.day_labels[static_cast<std::size_t>(t)] << ','
          << panel.location_ids[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < features.cols(); ++k) {
        out << ',' << format_double(features(observation_row(i, t, n), k));
      }
      out << '\n';
    }
  }
}

MarginalField read_marginals(std::istream& in, const std::string& source,
                             const RainPanel& panel) {
  CsvReader csv(in, source);
  const std::vector<std::string> cols{"date", "loc", "p", "mu", "phi"};
  const auto header = csv.header();
  expect_header(csv, header, cols);
  csv.expect_width(header, cols.size());
  MarginalField field(panel.n_locations(), panel.n_days());
  std::vector<bool> filled(static_cast<std::size_t>(panel.n_locations() * panel.n_days()));
  const CellIndex index(panel);
  std::vector<std::string> f;
  while (csv.next(f)) {
    csv.expect_width(f, cols.size());
    const Eigen::Index t = index.day(csv, f[0]);
    const Eigen::Index i = index.loc(csv, f[1]);
    const auto r = static_cast<std::size_t>(observation_row(i, t, panel.n_locations()));
    if (filled[r]) csv.fail("loc", "duplicate row for (" + f[0] + ", " + f[1] + ")");
    filled[r] = true;
    GammaMixture law{csv.number(f[2], "p"), csv.number(f[3], "mu"),
                     csv.number(f[4], "phi")};
    if (law.p < 0.0 || law.p > 1.0) csv.fail("p", "probability outside [0, 1]");
    if (!(law.mu > 0.0)) csv.fail("mu", "mean must be positive");
    if (!(law.phi > 0.0)) csv.fail("phi", "dispersion must be positive");
    field.at(i, t) = law;
  }
  for (std::size_t r = 0; r < filled.size(); ++r) {
    if (!filled[r]) {
      const auto n = static_cast<std::size_t>(panel.n_locations());
      csv.fail(csv.row(), "loc",
               "no marginal row for (" + panel.day_labels[r / n] + ", " +
                   panel.location_ids[r % n] + ")");
    }
  }
  return field;
}

MarginalField read_marginals(const std::filesystem::path& path,
                             const RainPanel& panel) {
  return from_path(path, [&](std::istream& in, const std::string& s) {
    return read_marginals(in, s, panel);
  });
}

void write_marginals(std::ostream& out, const MarginalField& field,
                     const RainPanel& panel) {
  out << "date,loc,p,mu,phi\n";
  for (Eigen::Index t = 0; t < field.n_days(); ++t) {
    for (Eigen::Index i = 0; i < field.n_locations(); ++i) {
      const GammaMixture& law = field.at(i, t);
      out << panel.day_labels[static_cast<std::size_t>(t)] << ','
          << panel.location_ids[static_cast<std::size_t>(i)] << ','
          << format_double(law.p) << ',' << format_double(law.mu) << ','
          << format_double(law.phi) << '\n';
    }
  }
}

std::vector<EnsembleBlock> read_ensemble(std::istream& in, const std::string& source,
                                         const RainPanel& panel) {
  CsvReader csv(in, source);
  std::vector<std::string> want{"day", "replicate"};
  for (const auto& id : panel.location_ids) want.push_back("loc_" + id);
  const auto header = csv.header();
  expect_header(csv, header, want);
  csv.expect_width(header, want.size());

  const CellIndex index(panel);
  const auto n = static_cast<std::size_t>(panel.n_locations());
  std::vector<EnsembleBlock> blocks;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> f;
  auto flush = [&] {
    if (rows.empty()) return;
    EnsembleBlock& b = blocks.back();
    b.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        b.samples(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = rows[j][i];
      }
    }
    rows.clear();
  };
  std::string current;
  std::map<std::string, bool> seen_days;
  while (csv.next(f)) {
    csv.expect_width(f, want.size());
    if (f[0] != current) {
      flush();
      if (seen_days.count(f[0])) {
        csv.fail("day", "rows for day '" + f[0] + "' are not contiguous");
      }
      seen_days[f[0]] = true;
      current = f[0];
      EnsembleBlock b;
      b.day = index.day(csv, f[0]);
      b.obs = panel.values.col(b.day);
      blocks.push_back(std::move(b));
    }
    const auto rep = text::parse_int(f[1]);
    if (!rep || *rep != static_cast<long long>(rows.size())) {
      csv.fail("replicate", "expected replicate " + std::to_string(rows.size()));
    }
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      row[i] = csv.number(f[i + 2], want[i + 2]);
      if (row[i] < 0.0) csv.fail(want[i + 2], "negative rainfall");
    }
    rows.push_back(std::move(row));
  }
  flush();
  if (blocks.empty()) csv.fail(csv.row(), "", "no data rows");
  const Eigen::Index m = blocks.front().members();
  for (const auto& b : blocks) {
    if (b.members() != m) {
      csv.fail(csv.row(), "replicate",
               "day '" + panel.day_labels[static_cast<std::size_t>(b.day)] + "' has " +
                   std::to_string(b.members()) + " replicates, expected " +
                   std::to_string(m));
    }
  }
  if (m < 2) csv.fail(csv.row(), "replicate", "need at least two replicates per day");
  return blocks;
}

std::vector<EnsembleBlock> read_ensemble(const std::filesystem::path& path,
                                         const RainPanel& panel) {
  return from_path(path, [&](std::istream& in, const std::string& s) {
    return read_ensemble(in, s, panel);
  });
}

void write_ensemble(std::ostream& out, const std::vector<EnsembleBlock>& blocks,
                    const RainPanel& panel) {
  out << "day,replicate";
  for (const auto& id : panel.location_ids) out << ",loc_" << id;
  out << '\n';
  for (const auto& b : blocks) {
    const auto& label = panel.day_labels[static_cast<std::size_t>(b.day)];
    for (Eigen::Index j = 0; j < b.members(); ++j) {
      out << label << ',' << j;
      for (Eigen::Index i = 0; i < b.n_locations(); ++i) {
        out << ',' << format_double(b.samples(j, i));
      }
      out << '\n';
    }
  }
}

void write_truth_json(std::ostream& out, const SynthSpec& spec) {
  json j;
  j["theta_true"] = spec.matern.theta;
  j["nu"] = spec.matern.nu;
  j["blend"] = spec.distance.blend;
  j["topo_scale"] = spec.distance.topo_scale;
  j["coord_scale"] = spec.distance.coord_scale;
  j["blend_mode"] = spec.distance.mode == BlendMode::kLinear ? "linear" : "euclidean";
  j["n_locations"] = spec.n_locations;
  j["n_days"] = spec.n_days;
  j["lat_range"] = {spec.lat_min, spec.lat_max};
  j["lon_range"] = {spec.lon_min, spec.lon_max};
  j["elev_range"] = {spec.elev_min, spec.elev_max};
  j["seed"] = spec.seed;
  j["start_date"] = spec.start_date;
  json m;
  switch (spec.marginal_kind) {
    case MarginalKind::kHomogeneous:
      m["kind"] = "homogeneous";
      m["p"] = spec.homogeneous.p;
      m["mu"] = spec.homogeneous.mu;
      m["phi"] = spec.homogeneous.phi;
      break;
    case MarginalKind::kPerLocation: {
      m["kind"] = "per_location";
      json laws = json::array();
      for (const auto& law : spec.per_location) {
        laws.push_back({{"p", law.p}, {"mu", law.mu}, {"phi", law.phi}});
      }
      m["laws"] = laws;
      break;
    }
    case MarginalKind::kJglm: {
      m["kind"] = "jglm";
      auto vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
      };
      m["alpha0"] = spec.jglm.alpha0;
      m["alpha"] = vec(spec.jglm.alpha);
      m["beta0"] = spec.jglm.beta0;
      m["beta"] = vec(spec.jglm.beta);
      m["gamma0"] = spec.jglm.gamma0;
      m["gamma"] = vec(spec.jglm.gamma);
      break;
    }
  }
  j["marginals"] = m;
  out << j.dump(2) << '\n';
}

void write_profile(std::ostream& out, const std::vector<ProfilePoint>& profile) {
  out << "theta,score,mc_stderr\n";
  for (const auto& p : profile) {
    out << format_double(p.theta) << ',' << format_double(p.score) << ','
        << format_double(p.mc_stderr) << '\n';
  }
}

void write_estimation_summary(std::ostream& out, const EstimationSummary& s) {
  json j;
  j["theta_hat"] = s.estimate.theta_hat;
  j["score"] = s.estimate.score;
  j["on_boundary"] = s.estimate.on_boundary;
  j["lower"] = s.search.lower;
  j["upper"] = s.search.upper;
  j["grid_size"] = s.search.grid_size;
  j["tolerance"] = s.search.tolerance;
  j["evaluations"] = s.estimate.profile.size();
  j["seed"] = s.score.seed;
  j["m"] = s.score.m;
  j["beta"] = s.score.beta;
  j["nu"] = s.nu;
  j["day_subsample"] = subsample_json(s.score.day_subsample, s.score.days);
  j["location_subsample"] =
      subsample_json(s.score.location_subsample, s.score.locations);
  j["days_scored"] = s.days_scored;
  j["warnings"] = s.estimate.warnings;
  out << j.dump(2) << '\n';
}

void write_diagnostics_json(std::ostream& out, const DiagnosticsReport& r) {
  json j;
  j["days"] = r.days;
  j["members"] = r.members;
  json roc = json::array();
  for (const auto& c : r.roc) {
    roc.push_back({{"q", c.q},
                   {"auc", optional_number(c.auc)},
                   {"events", c.events},
                   {"non_events", c.non_events}});
  }
  j["roc"] = roc;
  j["rank_histogram"] = {{"bins", r.rank.counts.size()},
                         {"chi_square", r.rank.chi_square},
                         {"dof", r.rank.dof},
                         {"p_value", r.rank.p_value}};
  j["crps_mean"] = r.crps;
  j["variogram"] = {{"exponent", r.variogram_exponent},
                    {"per_day_mean", r.variogram.mean},
                    {"sum", r.variogram.sum},
                    {"zero_distance_pairs", r.variogram.zero_distance_pairs}};
  j["rmsb"] = r.bias.rmsb;
  j["mab"] = r.bias.mab;
  double es_sum = 0.0;
  for (double v : r.energy) es_sum += v;
  j["energy_score"] = {{"beta", r.energy_beta},
                       {"per_day_mean", r.energy.empty() ? 0.0 : es_sum / r.energy.size()},
                       {"sum", es_sum}};
  j["crosscorr_center"] = r.crosscorr.center_id;
  j["warnings"] = r.warnings;
  out << j.dump(2) << '\n';
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "tau,fpr,tpr\n";
  for (const auto& p : curve.points) {
    out << format_double(p.tau) << ',' << format_double(p.fpr) << ','
        << format_double(p.tpr) << '\n';
  }
}

void write_rank_csv(std::ostream& out, const RankHistogram& hist) {
  out << "bin,count,frequency,expected\n";
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    out << b << ',' << hist.counts[b] << ',' << format_double(hist.frequencies[b])
        << ',' << format_double(hist.expected[b]) << '\n';
  }
}

void write_ecdf_csv(std::ostream& out, const std::vector<EcdfPoint>& curve) {
  out << "level,model,observed\n";
  for (const auto& p : curve) {
    out << format_double(p.level) << ',' << format_double(p.model) << ','
        << format_double(p.observed) << '\n';
  }
}

void write_crosscorr_csv(std::ostream& out, const CrossCorrelation& cc,
                         const LocationTable& locs) {
  out << "loc,lat,lon,correlation\n";
  for (std::size_t i = 0; i < locs.size(); ++i) {
    const auto& l = locs.rows[i];
    out << l.id << ',' << format_double(l.lat) << ',' << format_double(l.lon) << ',';
    if (cc.correlation[i]) out << format_double(*cc.correlation[i]);
    out << '\n';
  }
}

}  // namespace raincop::io
