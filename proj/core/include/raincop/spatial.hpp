#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "raincop/numerics.hpp"

namespace raincop {

struct Location {
  std::string id;
  double lat = 0.0;   // degrees
  double lon = 0.0;   // degrees
  double elev = 0.0;  // geopotential height units
};

struct LocationTable {
  std::vector<Location> rows;

  std::size_t size() const { return rows.size(); }
  /// Throws DomainError on duplicate ids, out-of-range or non-finite fields.
  void validate() const;
  std::vector<std::string> ids() const;
};

/// Kilometres per degree on a sphere of mean Earth radius.
inline constexpr double kKmPerDegree = 111.19508023353292;

enum class BlendMode {
  // a * D_geo + (1 - a) * T / topo_scale
  kLinear,
  // sqrt((a * D_geo)^2 + ((1 - a) * T / topo_scale)^2); a Euclidean distance
  // on scaled (lat, lon, elev), so the Matérn matrix stays positive definite
  // for any terrain.
  kEuclidean,
};

struct DistanceConfig {
  double blend = 0.9;        // a
  double topo_scale = 70.0;  // divisor of the elevation distance
  // Multiplier applied to (lat, lon) before the plain Euclidean norm.
  // 1 keeps degrees.
  double coord_scale = kKmPerDegree;
  BlendMode mode = BlendMode::kLinear;
};

struct DistanceMatrix {
  Eigen::MatrixXd values;
  DistanceConfig config;
  std::vector<std::string> warnings;

  Eigen::Index size() const { return values.rows(); }
  /// Principal submatrix on the given location indices, in the given order.
  DistanceMatrix subset(const std::vector<Eigen::Index>& indices) const;
};

/// Pairwise blend of the Euclidean (lat, lon) distance and the absolute
/// elevation difference. Coincident locations are allowed and reported in
/// `warnings`. Requires at least two locations.
DistanceMatrix build_distance_matrix(const LocationTable& locs,
                                     const DistanceConfig& config = {});

struct MaternParams {
  double theta = 450.0;  // lengthscale
  double nu = 3.5;       // smoothness
  void validate() const;
};

/// Matérn correlation at distance d. Exactly 1 at d == 0; underflows to 0
/// once sqrt(2 nu) d / theta exceeds roughly 700.
double matern_kernel(double d, const MaternParams& params);

struct CovarianceMatrix {
  Eigen::MatrixXd values;
  MaternParams params;
  DistanceMatrix distance;
  numerics::SpdFactor factor;

  Eigen::Index size() const { return values.rows(); }
};

/// Elementwise Matérn kernel over the distance matrix, validated and
/// factorized with numerics::spd_factorize. NotPositiveDefinite propagates.
CovarianceMatrix build_covariance(const DistanceMatrix& distance,
                                  const MaternParams& params);

/// Kernel matrix without factorization.
Eigen::MatrixXd matern_matrix(const Eigen::MatrixXd& distance,
                              const MaternParams& params);

}  // namespace raincop
