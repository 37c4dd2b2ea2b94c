#include "raincop/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "raincop/copula.hpp"
#include "raincop/error.hpp"
#include "raincop/parallel.hpp"
#include "raincop/rng.hpp"

namespace raincop {
namespace {

double coord_diff(double a, double b) { return a == b ? 0.0 : a - b; }

double powered_norm(double squared, double beta) {
  return std::pow(squared, 0.5 * beta);
}

// Partial Fisher-Yates: k distinct indices from [0, n), sorted.
std::vector<Eigen::Index> draw_subset(Eigen::Index n, Eigen::Index k,
                                      Stream& stream) {
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(
                           stream.below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<Eigen::Index> sorted_unique(std::vector<Eigen::Index> v,
                                        Eigen::Index bound, const char* what) {
  std::sort(v.begin(), v.end());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
    throw DomainError(std::string("ScoreObjective: duplicate ") + what);
  }
  if (!v.empty() && (v.front() < 0 || v.back() >= bound)) {
    throw DomainError(std::string("ScoreObjective: ") + what + " out of range");
  }
  return v;
}

}  // namespace

double energy_score_unbiased(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                             const Eigen::Ref<const Eigen::VectorXd>& obs,
                             double beta) {
  const Eigen::Index m = samples.rows();
  const Eigen::Index n = samples.cols();
  if (m < 2) throw DomainError("energy_score_unbiased: need m >= 2");
  if (obs.size() != n) {
    throw DomainError("energy_score_unbiased: obs length differs from samples");
  }
  if (!(beta > 0.0 && beta < 2.0)) {
    throw DomainError("energy_score_unbiased: beta must lie in (0, 2)");
  }
  double to_obs = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = coord_diff(samples(j, i), obs(i));
      sq += d * d;
    }
    to_obs += powered_norm(sq, beta);
  }
  double pairs = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = j + 1; k < m; ++k) {
      double sq = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = coord_diff(samples(j, i), samples(k, i));
        sq += d * d;
      }
      pairs += powered_norm(sq, beta);
    }
  }
  const double md = static_cast<double>(m);
  return 2.0 * to_obs / md - 2.0 * pairs / (md * (md - 1.0));
}

void ScoreConfig::validate() const {
  if (!(beta > 0.0 && beta < 2.0)) {
    throw DomainError("ScoreConfig: beta must lie in (0, 2)");
  }
  if (m < 2) throw DomainError("ScoreConfig: m must be at least 2");
  if (day_subsample && *day_subsample < 1) {
    throw DomainError("ScoreConfig: day_subsample must be positive");
  }
  if (location_subsample && *location_subsample < 1) {
    throw DomainError("ScoreConfig: location_subsample must be positive");
  }
}

ScoreObjective::ScoreObjective(const RainPanel& data, const MarginalField& field,
                               DistanceMatrix distance, ScoreConfig config)
    : config_(std::move(config)), distance_(std::move(distance)) {
  config_.validate();
  const Eigen::Index n = data.n_locations();
  const Eigen::Index t_all = data.n_days();
  if (distance_.size() != n) {
    throw DomainError("ScoreObjective: distance matrix and panel sizes differ");
  }
  if (t_all < 1) throw DomainError("ScoreObjective: panel has no days");

  GaussianObservations gauss = obs_to_gaussian(data, field);
  warnings_ = std::move(gauss.warnings);
  const CensorThresholds thresholds = censor_thresholds(field);

  if (!config_.days.empty()) {
    days_ = sorted_unique(config_.days, t_all, "days");
  } else if (config_.day_subsample && *config_.day_subsample < t_all) {
    Stream s(config_.seed, StreamTag::kDaySubsample);
    days_ = draw_subset(t_all, *config_.day_subsample, s);
  } else {
    days_.resize(static_cast<std::size_t>(t_all));
    std::iota(days_.begin(), days_.end(), Eigen::Index{0});
  }

  std::vector<Eigen::Index> fixed_locations;
  if (!config_.locations.empty()) {
    fixed_locations = sorted_unique(config_.locations, n, "locations");
  }
  const bool random_locations = fixed_locations.empty() &&
                                config_.location_subsample &&
                                *config_.location_subsample < n;
  if (!random_locations && fixed_locations.empty()) {
    fixed_locations.resize(static_cast<std::size_t>(n));
    std::iota(fixed_locations.begin(), fixed_locations.end(), Eigen::Index{0});
  }

  const std::size_t S = days_.size();
  day_locations_.resize(S);
  obs_.resize(S);
  thresholds_.resize(S);
  normals_.resize(S);
  for (std::size_t k = 0; k < S; ++k) {
    const Eigen::Index day = days_[k];
    const auto uday = static_cast<std::uint64_t>(day);
    if (random_locations) {
      Stream s(config_.seed, StreamTag::kLocationSubsample, uday);
      day_locations_[k] = draw_subset(n, *config_.location_subsample, s);
    } else {
      day_locations_[k] = fixed_locations;
    }
    obs_[k] = gauss.values.col(day);
    thresholds_[k] = thresholds.col(day);
    Stream latent(config_.seed, StreamTag::kScoreLatent, uday);
    normals_[k] = standard_normals(config_.m, n, latent);
  }
}

ObjectiveValue ScoreObjective::evaluate(double theta, double nu) const {
  MaternParams params{theta, nu};
  params.validate();
  const CovarianceMatrix cov = build_covariance(distance_, params);
  const std::size_t S = days_.size();
  ObjectiveValue out;
  out.per_day.assign(S, 0.0);
  parallel_for(S, config_.threads, [&](std::size_t k) {
    Eigen::MatrixXd latent = correlate(cov.factor, normals_[k]);
    censor_rows(latent, thresholds_[k]);
    const auto& locs = day_locations_[k];
    const auto cols = static_cast<Eigen::Index>(locs.size());
    Eigen::MatrixXd block(latent.rows(), cols);
    Eigen::VectorXd y(cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Eigen::Index i = locs[static_cast<std::size_t>(c)];
      block.col(c) = latent.col(i);
      y(c) = obs_[k](i);
    }
    out.per_day[k] = energy_score_unbiased(block, y, config_.beta);
  });
  double sum = 0.0;
  for (double v : out.per_day) sum += v;
  out.total = sum;
  if (S > 1) {
    const double mean = sum / static_cast<double>(S);
    double ss = 0.0;
    for (double v : out.per_day) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(S - 1));
    out.mc_stderr = std::sqrt(static_cast<double>(S)) * sd;
  }
  return out;
}

double sr_objective(double theta, const RainPanel& data,
                    const MarginalField& field, const DistanceMatrix& distance,
                    const ScoreConfig& config, double nu) {
  return ScoreObjective(data, field, distance, config)(theta, nu);
}

void ThetaSearchSpec::validate() const {
  if (!(lower > 0.0 && lower < upper && std::isfinite(upper))) {
    throw DomainError("ThetaSearchSpec: need 0 < lower < upper");
  }
  if (grid_size < 3) throw DomainError("ThetaSearchSpec: grid_size must be >= 3");
  if (!(tolerance > 0.0)) {
    throw DomainError("ThetaSearchSpec: tolerance must be positive");
  }
}

ThetaEstimate estimate_theta(const ScoreObjective& objective,
                             const ThetaSearchSpec& search, double nu) {
  search.validate();
  ThetaEstimate est;
  auto eval = [&](double theta, bool grid) {
    const ObjectiveValue v = objective.evaluate(theta, nu);
    est.profile.push_back(ProfilePoint{theta, v.total, v.mc_stderr, grid});
    return v.total;
  };

  const int g = search.grid_size;
  const double step = (search.upper - search.lower) / (g - 1);
  std::vector<double> grid(static_cast<std::size_t>(g));
  for (int i = 0; i < g; ++i) {
    grid[static_cast<std::size_t>(i)] =
        i == g - 1 ? search.upper : search.lower + step * i;
  }
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    eval(grid[i], true);
    if (est.profile[i].score < est.profile[best].score) best = i;
  }

  const bool left_edge = best == 0;
  const bool right_edge = best + 1 == grid.size();
  double a = grid[left_edge ? 0 : best - 1];
  double b = grid[right_edge ? best : best + 1];
  if (left_edge || right_edge) {
    est.warnings.push_back("grid minimizer lies on the search boundary");
  }

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = eval(c, false);
  double fd = eval(d, false);
  while (b - a > search.tolerance) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval(c, false);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval(d, false);
    }
  }

  std::stable_sort(est.profile.begin(), est.profile.end(),
                   [](const ProfilePoint& l, const ProfilePoint& r) {
                     return l.theta < r.theta;
                   });
  const auto it = std::min_element(
      est.profile.begin(), est.profile.end(),
      [](const ProfilePoint& l, const ProfilePoint& r) { return l.score < r.score; });
  est.theta_hat = it->theta;
  est.score = it->score;
  est.on_boundary = est.theta_hat <= search.lower || est.theta_hat >= search.upper;
  if (est.on_boundary) {
    est.warnings.push_back("theta_hat lies on the search boundary");
  }
  for (const auto& w : objective.warnings()) est.warnings.push_back(w);
  return est;
}

ThetaEstimate estimate_theta(const RainPanel& data, const MarginalField& field,
                             const DistanceMatrix& distance,
                             const ScoreConfig& config,
                             const ThetaSearchSpec& search, double nu) {
  const ScoreObjective objective(data, field, distance, config);
  return estimate_theta(objective, search, nu);
}

bool profile_is_unimodal(const std::vector<ProfilePoint>& profile) {
  std::vector<double> s;
  for (const auto& p : profile) {
    if (p.from_grid) s.push_back(p.score);
  }
  if (s.size() < 4) return false;
  std::vector<double> smooth(s.size() - 2);
  for (std::size_t i = 0; i + 2 < s.size(); ++i) {
    smooth[i] = (s[i] + s[i + 1] + s[i + 2]) / 3.0;
  }
  int changes = 0;
  int first = 0;
  int last = 0;
  for (std::size_t i = 1; i < smooth.size(); ++i) {
    const double diff = smooth[i] - smooth[i - 1];
    const int sign = diff > 0 ? 1 : (diff < 0 ? -1 : 0);
    if (sign == 0) continue;
    if (first == 0) first = sign;
    if (last != 0 && sign != last) ++changes;
    last = sign;
  }
  return changes == 1 && first < 0;
}

}  // namespace raincop
