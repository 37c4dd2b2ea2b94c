#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "raincop/marginals.hpp"
#include "raincop/panel.hpp"
#include "raincop/spatial.hpp"

namespace raincop {

/// Unbiased energy-score estimate of an m x n ensemble against obs:
/// (2/m) sum_j |x_j - y|^beta - 1/(m(m-1)) sum_{j != k} |x_j - x_k|^beta.
/// Coordinates that are equal, including equal infinities, contribute 0.
double energy_score_unbiased(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                             const Eigen::Ref<const Eigen::VectorXd>& obs,
                             double beta = 0.5);

struct ScoreConfig {
  double beta = 0.5;
  Eigen::Index m = 30;
  // Random subset sizes; nullopt scores every day / location.
  std::optional<Eigen::Index> day_subsample;
  std::optional<Eigen::Index> location_subsample;
  // Explicit selections override the random subsets. Order is irrelevant.
  std::vector<Eigen::Index> days;
  std::vector<Eigen::Index> locations;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

struct ObjectiveValue {
  double total = 0.0;
  std::vector<double> per_day;  // aligned with ScoreObjective::days()
  double mc_stderr = 0.0;       // sqrt(S) * sd of per-day scores
};

/// Minimum-scoring-rule objective theta -> sum over days of the unbiased
/// energy score between censored latent simulations and the observations.
///
/// Observations are mapped to the Gaussian scale once. Day and location
/// subsets and the standard normals for each day are drawn once from the
/// seed, so every theta reuses the same random numbers. Day s draws its
/// normals from substream (seed, kScoreLatent, s), which makes the value for
/// a day independent of which other days are selected.
class ScoreObjective {
 public:
  ScoreObjective(const RainPanel& data, const MarginalField& field,
                 DistanceMatrix distance, ScoreConfig config);

  ObjectiveValue evaluate(double theta, double nu = 3.5) const;
  double operator()(double theta, double nu = 3.5) const {
    return evaluate(theta, nu).total;
  }

  const std::vector<Eigen::Index>& days() const { return days_; }
  /// Sorted location subset used on day index k of days().
  const std::vector<Eigen::Index>& locations(std::size_t k) const {
    return day_locations_[k];
  }
  const ScoreConfig& config() const { return config_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  ScoreConfig config_;
  DistanceMatrix distance_;
  std::vector<Eigen::Index> days_;
  std::vector<std::vector<Eigen::Index>> day_locations_;
  std::vector<Eigen::VectorXd> obs_;         // Gaussian-scale, per selected day
  std::vector<Eigen::VectorXd> thresholds_;  // per selected day, all locations
  std::vector<Eigen::MatrixXd> normals_;     // m x n per selected day
  std::vector<std::string> warnings_;
};

double sr_objective(double theta, const RainPanel& data,
                    const MarginalField& field, const DistanceMatrix& distance,
                    const ScoreConfig& config, double nu = 3.5);

struct ThetaSearchSpec {
  double lower = 200.0;
  double upper = 800.0;
  int grid_size = 13;
  double tolerance = 1.0;

  void validate() const;
};

struct ProfilePoint {
  double theta = 0.0;
  double score = 0.0;
  double mc_stderr = 0.0;
  bool from_grid = false;
};

struct ThetaEstimate {
  double theta_hat = 0.0;
  double score = 0.0;
  std::vector<ProfilePoint> profile;  // sorted by theta
  bool on_boundary = false;
  std::vector<std::string> warnings;
};

/// Coarse grid over [lower, upper], then golden-section search on the
/// bracket around the best grid point until it is narrower than the
/// tolerance. theta_hat is the best point evaluated.
ThetaEstimate estimate_theta(const ScoreObjective& objective,
                             const ThetaSearchSpec& search, double nu = 3.5);

ThetaEstimate estimate_theta(const RainPanel& data, const MarginalField& field,
                             const DistanceMatrix& distance,
                             const ScoreConfig& config,
                             const ThetaSearchSpec& search, double nu = 3.5);

/// True when a 3-point moving average of the grid scores has exactly one
/// sign change (minus to plus) in its first differences.
bool profile_is_unimodal(const std::vector<ProfilePoint>& profile);

}  // namespace raincop
