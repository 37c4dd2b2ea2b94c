#include "commands.hpp"

#include <chrono>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "raincop/copula.hpp"
#include "raincop/diagnostics.hpp"
#include "raincop/error.hpp"
#include "raincop/estimation.hpp"
#include "raincop/io.hpp"
#include "raincop/marginals.hpp"
#include "raincop/parallel.hpp"
#include "raincop/rng.hpp"
#include "raincop/synth.hpp"
#include "raincop/text.hpp"

namespace raincop::cli {
namespace {

namespace fs = std::filesystem;

template <typename Writer>
void emit(const fs::path& path, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  io::write_file(path, os.str());
}

std::uint64_t seed_of(const RunConfig& cfg) { return cfg.get_uint("seed", 1); }

Eigen::Index positive(const RunConfig& cfg, const std::string& key, long long fallback) {
  const long long v = cfg.get_int(key, fallback);
  if (v < 1) throw IngestionError("'" + key + "' must be a positive integer");
  return static_cast<Eigen::Index>(v);
}

DistanceConfig distance_config(const RunConfig& cfg) {
  DistanceConfig d;
  d.blend = cfg.get_double("a", d.blend);
  d.topo_scale = cfg.get_double("topo_scale", d.topo_scale);
  d.coord_scale = cfg.get_double("coord_scale", d.coord_scale);
  const std::string mode = cfg.get_string("blend_mode", "linear");
  if (mode == "linear") {
    d.mode = BlendMode::kLinear;
  } else if (mode == "euclidean") {
    d.mode = BlendMode::kEuclidean;
  } else {
    throw IngestionError("blend_mode must be 'linear' or 'euclidean', got '" + mode + "'");
  }
  return d;
}

struct Inputs {
  LocationTable locations;
  RainPanel rain;
};

Inputs load_inputs(const RunConfig& cfg) {
  Inputs in;
  in.locations = io::read_locations(cfg.require_path("locations"));
  in.rain = io::read_rainfall(cfg.require_path("rainfall"), in.locations);
  return in;
}

class Stopwatch {
 public:
  ~Stopwatch() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::cerr << "wall-clock: " << text::format_double(std::round(s * 1000) / 1000) << " s\n";
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

JglmCoefficients default_synth_coefficients(Eigen::Index d) {
  JglmCoefficients c = JglmCoefficients::zeros(d);
  c.alpha0 = 0.4;
  c.beta0 = 1.0;
  c.gamma0 = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    c.alpha(k) = 0.6 * sign / static_cast<double>(k + 1);
    c.beta(k) = 0.25 * sign / static_cast<double>(k + 1);
    c.gamma(k) = -0.1 * sign / static_cast<double>(k + 1);
  }
  return c;
}

}  // namespace

int cmd_synth(const RunConfig& cfg, const CommonOptions& options) {
  Stopwatch clock;
  SynthSpec spec;
  spec.n_locations = positive(cfg, "n_locations", spec.n_locations);
  spec.n_days = positive(cfg, "n_days", spec.n_days);
  spec.lat_min = cfg.get_double("lat_min", spec.lat_min);
  spec.lat_max = cfg.get_double("lat_max", spec.lat_max);
  spec.lon_min = cfg.get_double("lon_min", spec.lon_min);
  spec.lon_max = cfg.get_double("lon_max", spec.lon_max);
  spec.elev_min = cfg.get_double("elev_min", spec.elev_min);
  spec.elev_max = cfg.get_double("elev_max", spec.elev_max);
  spec.matern.theta = cfg.get_double("theta_true", spec.matern.theta);
  spec.matern.nu = cfg.get_double("nu", spec.matern.nu);
  spec.distance = distance_config(cfg);
  spec.seed = seed_of(cfg);
  spec.start_date = cfg.get_string("start_date", spec.start_date);
  spec.threads = options.threads;
  const std::string kind = cfg.get_string("synth_marginals", "homogeneous");
  if (kind == "homogeneous") {
    spec.homogeneous = {cfg.get_double("p", 0.6), cfg.get_double("mu", 3.0),
                        cfg.get_double("phi", 1.2)};
  } else if (kind == "jglm") {
    spec.marginal_kind = MarginalKind::kJglm;
    spec.jglm = default_synth_coefficients(positive(cfg, "feature_dim", 3));
  } else {
    throw IngestionError("synth_marginals must be 'homogeneous' or 'jglm', got '" + kind + "'");
  }

  const SynthDataset data = simulate_dataset(spec);
  const fs::path out = options.out;
  emit(out / "locations.csv", [&](std::ostream& os) { io::write_locations(os, data.locations); });
  emit(out / "rainfall.csv", [&](std::ostream& os) { io::write_rainfall(os, data.rain); });
  emit(out / "marginals.csv",
       [&](std::ostream& os) { io::write_marginals(os, data.field, data.rain); });
  emit(out / "truth.json", [&](std::ostream& os) { io::write_truth_json(os, spec); });
  if (data.features) {
    emit(out / "features.csv",
         [&](std::ostream& os) { io::write_features(os, *data.features, data.rain); });
    emit(out / "truth_coefficients.txt", [&](std::ostream& os) {
      write_coefficients(os, spec.jglm, IdentityTransform(spec.jglm.feature_dim()));
    });
  }
  for (const auto& w : data.distance.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "wrote " << spec.n_locations << " locations x " << spec.n_days
            << " days to " << out.string() << '\n';
  return 0;
}

int cmd_fit_marginals(const RunConfig& cfg, const CommonOptions& options) {
  Stopwatch clock;
  const Inputs in = load_inputs(cfg);
  const Eigen::MatrixXd features = io::read_features(cfg.require_path("features"), in.rain);
  std::shared_ptr<const FeatureTransform> transform;
  const std::string name = cfg.get_string("transform", "standardize");
  if (name == "standardize") {
    transform = std::make_shared<StandardizeTransform>(StandardizeTransform::fit(features));
  } else if (name == "identity") {
    transform = std::make_shared<IdentityTransform>(features.cols());
  } else {
    throw IngestionError("transform must be 'standardize' or 'identity', got '" + name + "'");
  }
  JglmFitConfig fit_cfg;
  fit_cfg.max_iterations = static_cast<int>(positive(cfg, "max_iterations", fit_cfg.max_iterations));
  const JglmFitResult fit = jglm_fit(features, in.rain, transform, fit_cfg);
  const MarginalField field = predict_field(features, in.rain.n_locations(),
                                            in.rain.n_days(), fit.coeffs, *transform);
  const fs::path out = options.out;
  emit(out / "coefficients.txt",
       [&](std::ostream& os) { write_coefficients(os, fit.coeffs, *transform); });
  emit(out / "marginals.csv",
       [&](std::ostream& os) { io::write_marginals(os, field, in.rain); });
  emit(out / "fit_summary.json", [&](std::ostream& os) {
    nlohmann::ordered_json j;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["observations"] = in.rain.values.size();
    j["initial_loss"] = fit.initial_loss;
    j["final_loss"] = fit.final_loss;
    j["gradient_norm"] = fit.gradient_norm;
    j["transform"] = transform->name();
    os << j.dump(2) << '\n';
  });
  if (!fit.converged) {
    std::cerr << "warning: marginal fit stopped after " << fit.iterations
              << " iterations without converging\n";
    if (options.strict) return 3;
  }
  std::cout << "fitted " << features.cols() << " features on " << in.rain.values.size()
            << " observations; final loss " << text::format_double(fit.final_loss) << '\n';
  return 0;
}

int cmd_estimate_theta(const RunConfig& cfg, const CommonOptions& options) {
  Stopwatch clock;
  const Inputs in = load_inputs(cfg);
  const MarginalField field = io::read_marginals(cfg.require_path("marginals"), in.rain);
  const DistanceMatrix distance = build_distance_matrix(in.locations, distance_config(cfg));

  ScoreConfig score;
  score.beta = cfg.get_double("beta", score.beta);
  score.m = positive(cfg, "m", score.m);
  if (const auto k = cfg.get_count_or_all("day_subsample")) score.day_subsample = *k;
  if (const auto k = cfg.get_count_or_all("location_subsample")) score.location_subsample = *k;
  score.seed = seed_of(cfg);
  score.threads = options.threads;

  ThetaSearchSpec search;
  search.lower = cfg.get_double("theta_lower", search.lower);
  search.upper = cfg.get_double("theta_upper", search.upper);
  search.grid_size = static_cast<int>(positive(cfg, "grid", search.grid_size));
  search.tolerance = cfg.get_double("tol", search.tolerance);
  const double nu = cfg.get_double("nu", 3.5);

  const ScoreObjective objective(in.rain, field, distance, score);
  const ThetaEstimate est = estimate_theta(objective, search, nu);

  const fs::path out = options.out;
  emit(out / "profile.csv", [&](std::ostream& os) { io::write_profile(os, est.profile); });
  emit(out / "estimate.json", [&](std::ostream& os) {
    io::write_estimation_summary(os, {est, search, score, nu, objective.days().size()});
  });
  for (const auto& w : distance.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& w : est.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "theta_hat " << text::format_double(est.theta_hat) << '\n';
  if (est.on_boundary && options.strict) return 3;
  return 0;
}

int cmd_simulate(const RunConfig& cfg, const CommonOptions& options) {
  Stopwatch clock;
  const Inputs in = load_inputs(cfg);
  const MarginalField field = io::read_marginals(cfg.require_path("marginals"), in.rain);
  const DistanceMatrix distance = build_distance_matrix(in.locations, distance_config(cfg));
  const MaternParams params{cfg.get_double("theta", 450.0), cfg.get_double("nu", 3.5)};
  const CovarianceMatrix cov = build_covariance(distance, params);
  const Eigen::Index members = positive(cfg, "members", 50);
  if (members < 2) throw IngestionError("'members' must be at least 2");

  std::vector<Eigen::Index> days;
  if (const auto k = cfg.get_count_or_all("days")) {
    for (Eigen::Index t = 0; t < std::min<Eigen::Index>(*k, in.rain.n_days()); ++t) days.push_back(t);
  } else {
    for (Eigen::Index t = 0; t < in.rain.n_days(); ++t) days.push_back(t);
  }
  const std::uint64_t seed = seed_of(cfg);
  std::vector<EnsembleBlock> blocks(days.size());
  parallel_for(days.size(), options.threads, [&](std::size_t k) {
    const Eigen::Index day = days[k];
    Stream stream(seed, StreamTag::kForecast, static_cast<std::uint64_t>(day));
    blocks[k] = {day, joint_forecast(cov, field, day, members, stream),
                 in.rain.values.col(day)};
  });
  emit(options.out / "ensemble.csv",
       [&](std::ostream& os) { io::write_ensemble(os, blocks, in.rain); });
  for (const auto& w : distance.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "simulated " << members << " members for " << days.size() << " days\n";
  return 0;
}

int cmd_diagnose(const RunConfig& cfg, const CommonOptions& options) {
  Stopwatch clock;
  const Inputs in = load_inputs(cfg);
  const MarginalField field = io::read_marginals(cfg.require_path("marginals"), in.rain);
  const std::vector<EnsembleBlock> blocks =
      io::read_ensemble(cfg.require_path("ensemble"), in.rain);
  const DistanceMatrix distance = build_distance_matrix(in.locations, distance_config(cfg));
  const std::uint64_t seed = seed_of(cfg);

  io::DiagnosticsReport report;
  report.days = blocks.size();
  report.members = static_cast<std::size_t>(blocks.front().members());
  const long long tau_points = cfg.get_int("tau_grid", 1001);
  const std::vector<double> taus =
      tau_points == 0 ? std::vector<double>{} : uniform_tau_grid(static_cast<std::size_t>(tau_points));
  const std::vector<double> qs = cfg.get_doubles("q_levels", {0.0, 1.0, 5.0});
  for (double q : qs) report.roc.push_back(roc_auc(field, in.rain, q, taus));
  report.rank = rank_histogram(blocks, static_cast<std::size_t>(cfg.get_int("rank_bins", 0)), seed);
  report.ecdf = ecdf_curve(blocks, cfg.get_doubles("ecdf_levels", {0, 0.5, 1, 2, 5, 10, 20, 50}));
  report.crosscorr = cross_correlation(in.rain.values, in.locations, cfg.get_string("center", ""));
  // Model correlation map from every (day, member) realization.
  Eigen::MatrixXd pooled(in.rain.n_locations(),
                         static_cast<Eigen::Index>(blocks.size()) * blocks.front().members());
  Eigen::Index col = 0;
  for (const auto& b : blocks) {
    for (Eigen::Index j = 0; j < b.members(); ++j) pooled.col(col++) = b.samples.row(j).transpose();
  }
  const CrossCorrelation model_cc =
      cross_correlation(pooled, in.locations, report.crosscorr.center_id);
  report.crps = crps_mean(blocks);
  report.variogram_exponent = cfg.get_double("variogram_p", 1.0);
  report.variogram = variogram_summary(blocks, distance, report.variogram_exponent);
  report.bias = rmsb_mab(blocks);
  report.energy_beta = cfg.get_double("beta", 0.5);
  report.energy = energy_scores(blocks, report.energy_beta);
  for (const auto& c : report.roc) {
    if (!c.auc) {
      report.warnings.push_back("AUC undefined at q=" + text::format_double(c.q) +
                                ": no events or no non-events");
    }
  }
  if (report.variogram.zero_distance_pairs > 0) {
    report.warnings.push_back(std::to_string(report.variogram.zero_distance_pairs) +
                              " location pairs at zero distance given zero variogram weight");
  }

  const fs::path out = options.out;
  emit(out / "diagnostics.json", [&](std::ostream& os) { io::write_diagnostics_json(os, report); });
  for (const auto& c : report.roc) {
    emit(out / ("roc_q" + text::format_double(c.q) + ".csv"),
         [&](std::ostream& os) { io::write_roc_csv(os, c); });
  }
  emit(out / "rank_hist.csv", [&](std::ostream& os) { io::write_rank_csv(os, report.rank); });
  emit(out / "ecdf.csv", [&](std::ostream& os) { io::write_ecdf_csv(os, report.ecdf); });
  emit(out / "crosscorr.csv", [&](std::ostream& os) {
    io::write_crosscorr_csv(os, report.crosscorr, in.locations);
  });
  emit(out / "crosscorr_model.csv",
       [&](std::ostream& os) { io::write_crosscorr_csv(os, model_cc, in.locations); });
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "crps " << text::format_double(report.crps) << ", rank p-value "
            << text::format_double(report.rank.p_value) << '\n';
  return 0;
}

}  // namespace raincop::cli
