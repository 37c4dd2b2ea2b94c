// Acceptance battery: one PASS/FAIL line per criterion, exit status 1 when
// any criterion fails. Usage: raincop_acceptance <path to raincop CLI>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "raincop/copula.hpp"
#include "raincop/diagnostics.hpp"
#include "raincop/error.hpp"
#include "raincop/estimation.hpp"
#include "raincop/marginals.hpp"
#include "raincop/numerics.hpp"
#include "raincop/spatial.hpp"
#include "raincop/synth.hpp"

using namespace raincop;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool ok, const std::string& label, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", label.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename... Args>
std::string fmt(const char* pattern, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---- 1, 2: lengthscale recovery ---------------------------------------------

void lengthscale_recovery(const std::string& label, double p) {
  constexpr double kTruth = 450.0;
  int hits = 0;
  std::string thetas;
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthSpec spec;  // 50 locations, 500 days, theta 450, a 0.9, nu 3.5
    spec.seed = seed;
    spec.homogeneous = {p, 3.0, 1.2};
    spec.threads = worker_count();
    const SynthDataset data = simulate_dataset(spec);
    ScoreConfig score;  // m = 30, beta = 0.5
    score.seed = 1000 + seed;
    score.threads = worker_count();
    const ThetaSearchSpec search;  // 13 points on [200, 800]
    const ThetaEstimate est = estimate_theta(data.rain, data.field, data.distance, score, search);
    hits += std::abs(est.theta_hat - kTruth) <= 0.15 * kTruth;
    thetas += fmt("%s%.0f", thetas.empty() ? "" : " ", est.theta_hat);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(hits >= 9, label,
         fmt("%d/10 seeds within 15%% of 450 (theta_hat: %s; %.1f s)", hits, thetas.c_str(),
             seconds));
}

// ---- 3: unbiased energy score ------------------------------------------------

void energy_score_unbiasedness() {
  const Eigen::Vector3d mean(0.5, -0.3, 1.0);
  Eigen::Matrix3d cov;
  cov << 1.0, 0.6, 0.2, 0.6, 1.5, -0.3, 0.2, -0.3, 0.8;
  const Eigen::Matrix3d chol = numerics::spd_factorize(cov).lower();
  const Eigen::Vector3d obs(0.2, 0.4, -0.1);
  auto draw = [&](Stream& s) {
    Eigen::Vector3d z(s.normal(), s.normal(), s.normal());
    return Eigen::Vector3d(mean + chol * z);
  };

  constexpr int kEvaluations = 10000;
  constexpr int kMembers = 5;
  Stream est_stream(3, StreamTag::kTest, 1);
  double sum = 0.0, sum_sq = 0.0, min_value = INFINITY;
  Eigen::MatrixXd samples(kMembers, 3);
  for (int e = 0; e < kEvaluations; ++e) {
    for (int j = 0; j < kMembers; ++j) samples.row(j) = draw(est_stream).transpose();
    const double v = energy_score_unbiased(samples, obs, 0.5);
    sum += v;
    sum_sq += v * v;
    min_value = std::min(min_value, v);
  }
  const double est_mean = sum / kEvaluations;
  const double est_se =
      std::sqrt((sum_sq / kEvaluations - est_mean * est_mean) / (kEvaluations - 1));

  // 2 E|X - y|^b - E|X - X'|^b from 10^6 independent (X, X', X'') triples.
  constexpr int kReference = 1000000;
  Stream ref_stream(3, StreamTag::kTest, 2);
  double rsum = 0.0, rsum_sq = 0.0;
  for (int i = 0; i < kReference; ++i) {
    const Eigen::Vector3d x = draw(ref_stream);
    const Eigen::Vector3d a = draw(ref_stream);
    const Eigen::Vector3d b = draw(ref_stream);
    const double h = 2.0 * std::sqrt((x - obs).norm()) - std::sqrt((a - b).norm());
    rsum += h;
    rsum_sq += h * h;
  }
  const double ref_mean = rsum / kReference;
  const double ref_se = std::sqrt((rsum_sq / kReference - ref_mean * ref_mean) / (kReference - 1));
  const double combined = std::hypot(est_se, ref_se);
  const double gap = std::abs(est_mean - ref_mean);
  report(gap <= 3.0 * combined && min_value >= 0.0, "criterion 3 energy-score unbiasedness",
         fmt("mean %.5f vs reference %.5f, |diff| %.5f <= 3 x %.5f; min estimate %.4g",
             est_mean, ref_mean, gap, combined, min_value));
}

// ---- 4: CRPS -------------------------------------------------------------------

void crps_oracle() {
  constexpr int kMembers = 100000;
  Stream s(4, StreamTag::kTest);
  std::vector<double> x(kMembers);
  for (auto& v : x) v = s.normal();
  const double closed = 2.0 * numerics::std_normal_pdf(0.0) - 1.0 / std::sqrt(std::numbers::pi);
  const double quadrature = oracle::gaussian_crps_quadrature(0.0);
  const double value = crps_sample(x, 0.0);
  bool degenerate = true;
  for (double xv : {-3.25, 0.0, 0.1, 7.5, 1e6}) {
    for (double y : {-1.0, 0.0, 0.1, 2.5}) {
      for (std::size_t m : {2, 3, 5, 10, 7}) {
        degenerate &= crps_sample(std::vector<double>(m, xv), y) == std::abs(xv - y);
      }
    }
  }
  report(std::abs(value - closed) <= 0.002 && degenerate, "criterion 4 CRPS oracle",
         fmt("crps %.5f vs closed form %.5f (quadrature %.5f); point forecast equals |x - y| "
             "exactly: %s",
             value, closed, quadrature, degenerate ? "yes" : "no"));
}

// ---- 5: marginals ----------------------------------------------------------------

void marginal_correctness() {
  double worst_u = 0.0;
  bool zero_exact = true;
  for (double p : {0.05, 0.3, 0.6, 0.95, 1.0}) {
    for (double mu : {0.2, 3.0, 25.0}) {
      for (double phi : {0.25, 1.2, 5.0}) {
        const GammaMixture law{p, mu, phi};
        zero_exact &= gm_cdf(law, 0.0) == 1.0 - p;
        for (int k = 1; k < 400; ++k) {
          const double u = (1.0 - p) + p * k / 400.0 * (1.0 - 1e-9);
          worst_u = std::max(worst_u, std::abs(gm_cdf(law, gm_quantile(law, u)) - u));
        }
      }
    }
  }

  JglmCoefficients truth = JglmCoefficients::zeros(3);
  truth.alpha0 = 0.3;
  truth.alpha << 0.8, -0.5, 0.2;
  truth.beta0 = 1.0;
  truth.beta << 0.3, 0.1, -0.2;
  truth.gamma0 = -0.2;
  truth.gamma << 0.1, -0.1, 0.05;
  // Independent observations: features N(0, 1), rainfall drawn from the law.
  constexpr Eigen::Index kObs = 5000;
  Stream s(1, StreamTag::kTest);
  Eigen::MatrixXd x(kObs, 3);
  std::vector<double> y(kObs);
  for (Eigen::Index r = 0; r < kObs; ++r) {
    for (Eigen::Index k = 0; k < 3; ++k) x(r, k) = s.normal();
    y[static_cast<std::size_t>(r)] = gm_sample(jglm_predict(x.row(r).transpose(), truth), s);
  }
  const JglmFitResult fit = jglm_fit(x, y, std::make_shared<IdentityTransform>(3));
  const JglmCoefficients& c = fit.coeffs;
  const double worst_coeff = std::max({std::abs(c.alpha0 - truth.alpha0),
                                       (c.alpha - truth.alpha).cwiseAbs().maxCoeff(),
                                       std::abs(c.beta0 - truth.beta0),
                                       (c.beta - truth.beta).cwiseAbs().maxCoeff(),
                                       std::abs(c.gamma0 - truth.gamma0),
                                       (c.gamma - truth.gamma).cwiseAbs().maxCoeff()});
  report(worst_u <= 1e-8 && zero_exact, "criterion 5a mixture cdf/quantile",
         fmt("worst round-trip error %.3g; gm_cdf(0) == 1 - p exactly: %s", worst_u,
             zero_exact ? "yes" : "no"));
  report(worst_coeff <= 0.05 && fit.converged, "criterion 5b JGLM coefficient recovery",
         fmt("5000 obs, d=3, worst |coef - truth| %.4f (tol 0.05), converged %s", worst_coeff,
             fit.converged ? "yes" : "no"));
}

// ---- 6: copula marginal preservation ---------------------------------------------

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

void copula_marginals() {
  constexpr Eigen::Index kDraws = 100000;
  const std::vector<GammaMixture> laws = {
      {0.6, 3.0, 1.2}, {0.2, 0.5, 0.4}, {0.95, 12.0, 2.5}, {1.0, 2.0, 1.0}, {0.0, 1.0, 1.0}};
  LocationTable locs;
  for (std::size_t i = 0; i < laws.size(); ++i) {
    locs.rows.push_back({"s" + std::to_string(i), 52.0 + 0.6 * i, -1.0 + 0.4 * i, 0.0});
  }
  const CovarianceMatrix cov = build_covariance(build_distance_matrix(locs), {450.0, 3.5});
  MarginalField field(static_cast<Eigen::Index>(laws.size()), 1);
  for (std::size_t i = 0; i < laws.size(); ++i) field.at(static_cast<Eigen::Index>(i), 0) = laws[i];

  Stream forecast_stream(6, StreamTag::kForecast, 0);
  const Eigen::MatrixXd joint = joint_forecast(cov, field, 0, kDraws, forecast_stream);
  double worst_ks = 0.0;
  for (std::size_t i = 0; i < laws.size(); ++i) {
    Stream direct(6, StreamTag::kMarginalSample, i);
    std::vector<double> ref(kDraws);
    for (auto& v : ref) v = gm_sample(laws[i], direct);
    const Eigen::VectorXd col = joint.col(static_cast<Eigen::Index>(i));
    worst_ks = std::max(worst_ks, ks_two_sample({col.data(), col.data() + col.size()}, ref));
  }

  // Dry iff the latent value is at or below the threshold, and then +0.0.
  Stream latent_stream(6, StreamTag::kLatent, 0);
  const Eigen::MatrixXd latent =
      correlate(cov.factor, standard_normals(kDraws, cov.size(), latent_stream));
  const Eigen::MatrixXd rain = latent_to_rain(latent, field, 0);
  const CensorThresholds d = censor_thresholds(field);
  std::size_t mismatches = 0, dry = 0;
  for (Eigen::Index j = 0; j < rain.rows(); ++j) {
    for (Eigen::Index i = 0; i < rain.cols(); ++i) {
      const double v = rain(j, i);
      const bool want_dry = latent(j, i) <= d(i, 0);
      const bool is_zero = v == 0.0 && !std::signbit(v);
      dry += is_zero;
      mismatches += want_dry ? !is_zero : !(v > 0.0);
    }
  }
  report(worst_ks < 0.01 && mismatches == 0, "criterion 6 copula marginal preservation",
         fmt("worst KS %.5f over %zu locations at 1e5 draws; %zu dry cells, %zu not bit-exact "
             "+0.0 or misclassified",
             worst_ks, laws.size(), dry, mismatches));
}

// ---- 7: covariance validity ---------------------------------------------------------

void covariance_validity() {
  int factorized = 0;
  double max_jitter = 0.0;
  bool unit_diagonal = true, monotone = true, bounded = true;
  std::string failure;
  const double nus[] = {0.5, 1.5, 2.5, 3.5};
  for (int set = 0; set < 100; ++set) {
    Stream s(7, StreamTag::kTest, static_cast<std::uint64_t>(set));
    const auto n = static_cast<std::size_t>(2 + s.below(199));
    LocationTable locs;
    for (std::size_t i = 0; i < n; ++i) {
      locs.rows.push_back({"s" + std::to_string(i), 49.9 + 8.8 * s.uniform(),
                           -8.2 + 10.0 * s.uniform(), 0.0});
    }
    const MaternParams params{50.0 + 1950.0 * s.uniform(), nus[set % 4]};
    const DistanceMatrix dist = build_distance_matrix(locs);
    try {
      const CovarianceMatrix cov = build_covariance(dist, params);
      ++factorized;
      max_jitter = std::max(max_jitter, cov.factor.jitter_applied());
      for (Eigen::Index i = 0; i < cov.size(); ++i) unit_diagonal &= cov.values(i, i) == 1.0;
    } catch (const NotPositiveDefinite& e) {
      if (failure.empty()) {
        failure = fmt("; set %d (n=%zu, theta=%.0f, nu=%.1f) not factorizable, min eigenvalue %.3g",
                      set, n, params.theta, params.nu, e.min_eigenvalue());
      }
    }
    // Kernel is 1 at zero, within [0, 1], and nonincreasing in distance.
    std::vector<double> d(dist.values.data(), dist.values.data() + dist.values.size());
    std::sort(d.begin(), d.end());
    double previous = matern_kernel(0.0, params);
    bounded &= previous == 1.0;
    for (double r : d) {
      const double k = matern_kernel(r, params);
      monotone &= k <= previous;
      bounded &= k >= 0.0 && k <= 1.0;
      previous = k;
    }
    // and nondecreasing in the lengthscale at fixed distance.
    const double r = 1.0 + 999.0 * s.uniform();
    monotone &= matern_kernel(r, params) <= matern_kernel(r, {params.theta * 1.1, params.nu});
  }
  report(factorized == 100 && max_jitter <= 1e-8 && unit_diagonal && monotone && bounded,
         "criterion 7 covariance validity",
         fmt("%d/100 factorized, max jitter %.1e (limit 1e-8), unit diagonal %s, monotone %s, "
             "bounded %s",
             factorized, max_jitter, unit_diagonal ? "yes" : "no", monotone ? "yes" : "no",
             bounded ? "yes" : "no") +
             failure);
}

// ---- 8: diagnostics sanity -----------------------------------------------------------

void diagnostics_battery() {
  // Exchangeable: the observation is one more draw from the forecast law.
  // One location per day keeps the ranks independent.
  constexpr Eigen::Index kMembers = 19;
  SynthSpec spec;
  spec.n_locations = 20;
  spec.n_days = 1;
  spec.seed = 8;
  const SynthDataset base = simulate_dataset(spec);
  const CovarianceMatrix cov = build_covariance(base.distance, spec.matern);
  int passing = 0;
  double min_p = 1.0;
  for (std::uint64_t run = 0; run < 100; ++run) {
    std::vector<EnsembleBlock> blocks;
    for (std::uint64_t day = 0; day < 400; ++day) {
      Stream s(8, StreamTag::kForecast, run, day);
      const Eigen::MatrixXd draws = joint_forecast(cov, base.field, 0, kMembers + 1, s);
      const Eigen::Index loc = static_cast<Eigen::Index>(day % spec.n_locations);
      EnsembleBlock block;
      block.day = static_cast<Eigen::Index>(day);
      block.samples = draws.block(0, loc, kMembers, 1);
      block.obs = draws.block(kMembers, loc, 1, 1).transpose();
      blocks.push_back(std::move(block));
    }
    const RankHistogram h = rank_histogram(blocks, 0, run);
    passing += h.p_value > 0.01;
    min_p = std::min(min_p, h.p_value);
  }
  report(passing >= 95, "criterion 8a exchangeable rank histograms",
         fmt("%d/100 runs with chi-square p > 0.01 (min p %.3g)", passing, min_p));

  // Uninformative forecaster: occurrence probabilities independent of the data.
  SynthSpec auc_spec;
  auc_spec.seed = 9;
  const SynthDataset data = simulate_dataset(auc_spec);
  MarginalField noise(data.field.n_locations(), data.field.n_days());
  Stream u(9, StreamTag::kTest);
  for (Eigen::Index t = 0; t < noise.n_days(); ++t) {
    for (Eigen::Index i = 0; i < noise.n_locations(); ++i) noise.at(i, t) = {u.uniform(), 3.0, 1.2};
  }
  double worst_auc = 0.0;
  std::string aucs;
  for (double q : {0.0, 1.0, 5.0}) {
    const RocCurve roc = roc_auc(noise, data.rain, q);
    const double auc = roc.auc.value_or(NAN);
    worst_auc = std::max(worst_auc, std::isnan(auc) ? INFINITY : std::abs(auc - 0.5));
    aucs += fmt("%sq=%g: %.4f", aucs.empty() ? "" : ", ", q, auc);
  }
  report(worst_auc <= 0.02, "criterion 8b uninformative forecaster AUC",
         fmt("%s (tol 0.5 +/- 0.02)", aucs.c_str()));

  // Correct dependence versus independence, same marginals; desk-scale
  // fixture, 25 members per day, exponent 1.
  SynthSpec vs;
  vs.seed = 10;
  const SynthDataset obs = simulate_dataset(vs);
  const CovarianceMatrix right = build_covariance(obs.distance, vs.matern);
  const CovarianceMatrix independent = build_covariance(obs.distance, {1e-3, vs.matern.nu});
  int wins = 0;
  for (Eigen::Index t = 0; t < vs.n_days; ++t) {
    Stream a(10, StreamTag::kForecast, static_cast<std::uint64_t>(t), 0);
    Stream b(10, StreamTag::kForecast, static_cast<std::uint64_t>(t), 1);
    const Eigen::VectorXd y = obs.rain.values.col(t);
    const EnsembleBlock good{t, joint_forecast(right, obs.field, t, 25, a), y};
    const EnsembleBlock bad{t, joint_forecast(independent, obs.field, t, 25, b), y};
    wins += variogram_score(good, obs.distance).value < variogram_score(bad, obs.distance).value;
  }
  const double share = static_cast<double>(wins) / static_cast<double>(vs.n_days);
  report(share >= 0.9, "criterion 8c variogram score separates dependence",
         fmt("correct model better on %d/%ld days (%.1f%%, need 90%%)", wins,
             static_cast<long>(vs.n_days), 100.0 * share));
}

// ---- 9: CLI determinism -----------------------------------------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& first_difference) {
  std::vector<fs::path> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename());
  std::size_t count_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++count_b;
  if (names.empty() || names.size() != count_b) {
    first_difference = a.string() + " vs " + b.string() + ": file sets differ";
    return false;
  }
  for (const auto& name : names) {
    if (slurp(a / name) != slurp(b / name)) {
      first_difference = (a / name).string();
      return false;
    }
  }
  return true;
}

void cli_determinism(const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / ("raincop_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto run = [&](const std::string& args) {
    const std::string command = cli + " " + args + " >/dev/null 2>&1";
    return std::system(command.c_str()) == 0;
  };
  const std::string fixture = (root / "fixture").string();
  bool ok = run("synth --seed 11 --n_locations 25 --n_days 60 --set synth_marginals=jglm --out " + fixture);
  const std::string in = " --locations " + fixture + "/locations.csv --rainfall " + fixture +
                         "/rainfall.csv";
  const std::string marg = " --marginals " + fixture + "/marginals.csv";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "synth --seed 11 --n_locations 25 --n_days 60 --set synth_marginals=jglm"},
      {"fit-marginals", "fit-marginals" + in + " --features " + fixture + "/features.csv"},
      {"estimate-theta", "estimate-theta --seed 3 --grid 5 --m 10" + in + marg},
      {"simulate", "simulate --seed 4 --members 12" + in + marg},
      {"diagnose", "diagnose --seed 5" + in + marg + " --ensemble " + (root / "ens.csv").string()},
  };
  ok = ok && run("simulate --seed 4 --members 12" + in + marg + " --out " + (root / "ens").string());
  if (ok) fs::copy_file(root / "ens/ensemble.csv", root / "ens.csv");
  std::string detail, difference;
  for (const auto& [name, args] : commands) {
    bool same = ok;
    for (const auto& [threads, dir] : {std::pair{"1", "_1"}, {"4", "_4"}, {"1", "_1b"}}) {
      same = same && run(args + " --threads " + threads + " --out " + (root / (name + dir)).string());
    }
    same = same && same_tree(root / (name + "_1"), root / (name + "_4"), difference) &&
           same_tree(root / (name + "_1"), root / (name + "_1b"), difference);
    ok = ok && same;
    detail += fmt("%s%s %s", detail.empty() ? "" : ", ", name.c_str(), same ? "identical" : "DIFFERS");
  }
  fs::remove_all(root);
  report(ok, "criterion 9 CLI determinism",
         detail + " across --threads 1/4 and reruns" + (difference.empty() ? "" : " (" + difference + ")"));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <raincop cli>\n", argv[0]);
    return 2;
  }
  lengthscale_recovery("criterion 1 lengthscale recovery (censored)", 0.6);
  lengthscale_recovery("criterion 2 lengthscale recovery (uncensored)", 1.0);
  energy_score_unbiasedness();
  crps_oracle();
  marginal_correctness();
  copula_marginals();
  covariance_validity();
  diagnostics_battery();
  cli_determinism(argv[1]);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
