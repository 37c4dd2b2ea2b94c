#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "raincop/marginals.hpp"
#include "raincop/panel.hpp"
#include "raincop/rng.hpp"
#include "raincop/spatial.hpp"

namespace raincop {

/// Gaussian-scale censoring thresholds d(i, s) = Phi^{-1}(1 - p(i, s)),
/// n locations by T days; +inf where p == 0 and -inf where p == 1.
using CensorThresholds = Eigen::MatrixXd;

CensorThresholds censor_thresholds(const MarginalField& field);

struct LatentDraw {
  Eigen::VectorXd values;
  StreamId stream;
};

struct CensoredDraw {
  Eigen::VectorXd values;
};

/// Rows of `normals` (m x n, i.i.d. standard normal) correlated through the
/// lower factor: row_j <- L z_j.
Eigen::MatrixXd correlate(const numerics::SpdFactor& factor,
                          const Eigen::Ref<const Eigen::MatrixXd>& normals);

/// Fills an m x n matrix with standard normals from one stream, row by row.
Eigen::MatrixXd standard_normals(Eigen::Index m, Eigen::Index n, Stream& stream);

/// m draws L z with z i.i.d. standard normal from `stream`.
std::vector<LatentDraw> sample_latent(const CovarianceMatrix& cov, Eigen::Index m,
                                      Stream& stream);

/// Elementwise max(x, d) with ties censored to d.
CensoredDraw censor(const LatentDraw& draw,
                    const Eigen::Ref<const Eigen::VectorXd>& thresholds);

/// In-place censoring of each row of an m x n block.
void censor_rows(Eigen::Ref<Eigen::MatrixXd> block,
                 const Eigen::Ref<const Eigen::VectorXd>& thresholds);

struct GaussianObservations {
  Eigen::MatrixXd values;  // n x T
  std::vector<std::string> warnings;
};

/// x(i, s) = Phi^{-1}(F(i, s)(y(i, s))). Dry cells land exactly on the
/// threshold d(i, s). Probabilities that round to 0 or 1 are clamped to
/// [1e-12, 1 - 1e-12] and reported. Throws DomainError for rain where the
/// marginal has p == 0.
GaussianObservations obs_to_gaussian(const RainPanel& rain,
                                     const MarginalField& field);

/// m joint rainfall draws (m x n) for one day: u = Phi(x*), then the
/// marginal quantile of u at each location. Dry outcomes are exact zeros.
Eigen::MatrixXd joint_forecast(const CovarianceMatrix& cov,
                               const MarginalField& field, Eigen::Index day,
                               Eigen::Index m, Stream& stream);

/// Maps one latent block (m x n) to rainfall under the day's marginals.
Eigen::MatrixXd latent_to_rain(const Eigen::Ref<const Eigen::MatrixXd>& latent,
                               const MarginalField& field, Eigen::Index day);

}  // namespace raincop
