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

/// m ensemble members for one day at n locations plus that day's observation.
struct EnsembleBlock {
  Eigen::Index day = 0;
  Eigen::MatrixXd samples;  // m x n
  Eigen::VectorXd obs;      // n

  Eigen::Index members() const { return samples.rows(); }
  Eigen::Index n_locations() const { return samples.cols(); }
  /// Throws DomainError on negative or non-finite values, m < 2, or a
  /// width mismatch between samples and obs.
  void validate() const;
};

// ---- ROC ------------------------------------------------------------------

struct RocPoint {
  double tau = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  double q = 0.0;
  // Ordered by decreasing tau, from (0, 0) to (1, 1). The endpoints carry
  // tau = +inf and -inf.
  std::vector<RocPoint> points;
  std::optional<double> auc;  // nullopt without both events and non-events
  std::size_t events = 0;
  std::size_t non_events = 0;
};

/// `n` evenly spaced thresholds in [0, 1].
std::vector<double> uniform_tau_grid(std::size_t n = 1001);

/// Signal iff score > tau. An empty tau grid sweeps every distinct score.
RocCurve roc_from_scores(const std::vector<double>& scores,
                         const std::vector<bool>& events,
                         const std::vector<double>& tau_grid);

/// Pools every (location, day) cell: score 1 - F(q), event y > q.
RocCurve roc_auc(const MarginalField& field, const RainPanel& obs, double q,
                 const std::vector<double>& tau_grid = uniform_tau_grid());

/// Trapezoidal area under the stored points.
double trapezoid_auc(const std::vector<RocPoint>& points);

// ---- Rank histogram -------------------------------------------------------

struct RankHistogram {
  std::vector<std::uint64_t> counts;
  std::vector<double> expected;  // under uniform ranks
  std::vector<double> frequencies;
  double chi_square = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Rank of the observation among m members: the count strictly below plus
/// a uniform draw from {0, ..., ties}. Ranks 0..m map to `bins` bins; 0
/// bins means m + 1. Tie draws use substream (seed, kRankTies, block, loc).
RankHistogram rank_histogram(const std::vector<EnsembleBlock>& blocks,
                             std::size_t bins = 0, std::uint64_t seed = 0);

// ---- ECDF -----------------------------------------------------------------

struct EcdfPoint {
  double level = 0.0;
  double model = 0.0;     // pooled fraction of members above level
  double observed = 0.0;  // pooled fraction of observations above level
};

std::vector<EcdfPoint> ecdf_curve(const std::vector<EnsembleBlock>& blocks,
                                  const std::vector<double>& levels);

// ---- Cross-correlation ----------------------------------------------------

struct CrossCorrelation {
  Eigen::Index center = 0;
  std::string center_id;
  std::vector<std::optional<double>> correlation;  // per location
};

/// Location closest (in lat/lon degrees) to the mean coordinate.
Eigen::Index center_of_mass(const LocationTable& locs);

/// Pearson correlation across days between each location and the centre.
/// An empty centre id selects center_of_mass. Zero-variance series give
/// nullopt.
CrossCorrelation cross_correlation(const Eigen::Ref<const Eigen::MatrixXd>& panel,
                                   const LocationTable& locs,
                                   const std::string& center = "");

// ---- CRPS -----------------------------------------------------------------

/// (1/m) sum |x_j - y| - 1/(2 m (m - 1)) sum_{j != k} |x_j - x_k|.
double crps_sample(const std::vector<double>& samples, double y);

/// Mean CRPS over every (location, day) cell of the blocks.
double crps_mean(const std::vector<EnsembleBlock>& blocks);

// ---- Variogram score ------------------------------------------------------

struct VariogramScore {
  double value = 0.0;
  std::size_t zero_distance_pairs = 0;
};

/// sum_{k != l} w_kl (|y_k - y_l|^p - mean_j |Y_jk - Y_jl|^p)^2 with
/// w_kl = 1 / D_kl; pairs at zero distance get weight 0 and are counted.
VariogramScore variogram_score(const EnsembleBlock& block,
                               const DistanceMatrix& distance, double p = 1.0);

struct VariogramSummary {
  std::vector<double> per_day;
  double mean = 0.0;
  double sum = 0.0;
  std::size_t zero_distance_pairs = 0;  // per day
};

VariogramSummary variogram_summary(const std::vector<EnsembleBlock>& blocks,
                                   const DistanceMatrix& distance,
                                   double p = 1.0);

// ---- RMSB / MAB -----------------------------------------------------------

struct BiasSummary {
  double rmsb = 0.0;
  double mab = 0.0;
};

double median(std::vector<double> values);

/// Errors of the per-cell ensemble median against the observation.
BiasSummary rmsb_mab(const std::vector<EnsembleBlock>& blocks);

// ---- Energy score ---------------------------------------------------------

/// Unbiased energy score of each block on the rainfall scale.
std::vector<double> energy_scores(const std::vector<EnsembleBlock>& blocks,
                                  double beta = 0.5);

}  // namespace raincop
