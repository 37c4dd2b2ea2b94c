#include "raincop/spatial.hpp"

#include <cmath>
#include <set>

#include "raincop/error.hpp"

namespace raincop {

void LocationTable::validate() const {
  std::set<std::string> seen;
  for (const auto& row : rows) {
    if (row.id.empty()) throw DomainError("LocationTable: empty location id");
    if (!seen.insert(row.id).second) {
      throw DomainError("LocationTable: duplicate id '" + row.id + "'");
    }
    if (!std::isfinite(row.lat) || !std::isfinite(row.lon) ||
        !std::isfinite(row.elev)) {
      throw DomainError("LocationTable: non-finite field for '" + row.id + "'");
    }
    if (row.lat < -90.0 || row.lat > 90.0) {
      throw DomainError("LocationTable: latitude out of range for '" + row.id + "'");
    }
    if (row.lon < -180.0 || row.lon > 180.0) {
      throw DomainError("LocationTable: longitude out of range for '" + row.id + "'");
    }
  }
}

std::vector<std::string> LocationTable::ids() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.id);
  return out;
}

DistanceMatrix DistanceMatrix::subset(
    const std::vector<Eigen::Index>& indices) const {
  DistanceMatrix out;
  out.config = config;
  const auto k = static_cast<Eigen::Index>(indices.size());
  out.values.resize(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) {
      out.values(r, c) = values(indices[r], indices[c]);
    }
  }
  return out;
}

DistanceMatrix build_distance_matrix(const LocationTable& locs,
                                     const DistanceConfig& config) {
  locs.validate();
  if (locs.size() < 2) {
    throw DomainError("build_distance_matrix: need at least two locations");
  }
  if (!(config.blend >= 0.0 && config.blend <= 1.0)) {
    throw DomainError("build_distance_matrix: blend coefficient must lie in [0,1]");
  }
  if (!(config.topo_scale > 0.0) || !(config.coord_scale > 0.0)) {
    throw DomainError("build_distance_matrix: scales must be positive");
  }
  const auto n = static_cast<Eigen::Index>(locs.size());
  DistanceMatrix out;
  out.config = config;
  out.values = Eigen::MatrixXd::Zero(n, n);
  const double a = config.blend;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& li = locs.rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& lj = locs.rows[static_cast<std::size_t>(j)];
      const double geo =
          config.coord_scale * std::hypot(li.lat - lj.lat, li.lon - lj.lon);
      const double topo = std::abs(li.elev - lj.elev) / config.topo_scale;
      const double d = config.mode == BlendMode::kLinear
                           ? a * geo + (1.0 - a) * topo
                           : std::hypot(a * geo, (1.0 - a) * topo);
      out.values(i, j) = d;
      out.values(j, i) = d;
      if (d == 0.0) {
        out.warnings.push_back("locations '" + li.id + "' and '" + lj.id +
                               "' are at distance 0; positive definiteness "
                               "relies on diagonal jitter");
      }
    }
  }
  return out;
}

void MaternParams::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw DomainError("MaternParams: lengthscale must be positive");
  }
  if (!(nu > 0.0) || nu > 10.0) {
    throw DomainError("MaternParams: smoothness must lie in (0, 10]");
  }
}

double matern_kernel(double d, const MaternParams& params) {
  params.validate();
  if (std::isnan(d) || d < 0.0) {
    throw DomainError("matern_kernel: distance must be non-negative");
  }
  if (d == 0.0) return 1.0;
  const double nu = params.nu;
  const double r = std::sqrt(2.0 * nu) * d / params.theta;
  if (std::isinf(r)) return 0.0;

  if (numerics::is_half_integer(nu)) {
    // exp(-r) * n!/(2n)! * sum_i (n+i)!/(i!(n-i)!) (2r)^{n-i}, normalized so
    // the polynomial starts at 1.
    const int n = static_cast<int>(nu - 0.5);
    double term = 1.0;
    double poly = 1.0;
    // term_j / term_{j-1} for the ascending powers of r.
    for (int j = 1; j <= n; ++j) {
      term *= 2.0 * r * static_cast<double>(n - j + 1) /
              static_cast<double>(j * (2 * n - j + 1));
      poly += term;
    }
    return std::min(1.0, std::exp(-r) * poly);
  }

  if (r < 1e-150) return 1.0;
  const double log_k = (1.0 - nu) * std::log(2.0) - numerics::log_gamma(nu) +
                       nu * std::log(r) - r +
                       std::log(numerics::bessel_k_scaled(nu, r));
  return std::min(1.0, std::exp(log_k));
}

Eigen::MatrixXd matern_matrix(const Eigen::MatrixXd& distance,
                              const MaternParams& params) {
  params.validate();
  const Eigen::Index n = distance.rows();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double k = matern_kernel(distance(i, j), params);
      out(i, j) = k;
      out(j, i) = k;
    }
  }
  return out;
}

CovarianceMatrix build_covariance(const DistanceMatrix& distance,
                                  const MaternParams& params) {
  if (distance.values.rows() != distance.values.cols()) {
    throw DomainError("build_covariance: distance matrix must be square");
  }
  Eigen::MatrixXd sigma = matern_matrix(distance.values, params);
  numerics::SpdFactor factor = numerics::spd_factorize(sigma);
  return CovarianceMatrix{std::move(sigma), params, distance, std::move(factor)};
}

}  // namespace raincop
