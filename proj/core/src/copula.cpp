#include "raincop/copula.hpp"

#include <algorithm>
#include <cmath>

#include "raincop/error.hpp"
#include "raincop/numerics.hpp"

namespace raincop {

CensorThresholds censor_thresholds(const MarginalField& field) {
  CensorThresholds d(field.n_locations(), field.n_days());
  for (Eigen::Index t = 0; t < field.n_days(); ++t) {
    for (Eigen::Index i = 0; i < field.n_locations(); ++i) {
      d(i, t) = latent_threshold(field.at(i, t).p);
    }
  }
  return d;
}

Eigen::MatrixXd correlate(const numerics::SpdFactor& factor,
                          const Eigen::Ref<const Eigen::MatrixXd>& normals) {
  if (normals.cols() != factor.size()) {
    throw DomainError("correlate: normals have wrong dimension");
  }
  // (L z_j)^T = z_j^T L^T for every row j.
  return normals * factor.lower().triangularView<Eigen::Lower>().transpose();
}

Eigen::MatrixXd standard_normals(Eigen::Index m, Eigen::Index n, Stream& stream) {
  Eigen::MatrixXd z(m, n);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) z(j, i) = stream.normal();
  }
  return z;
}

std::vector<LatentDraw> sample_latent(const CovarianceMatrix& cov, Eigen::Index m,
                                      Stream& stream) {
  if (m < 1) throw DomainError("sample_latent: need at least one draw");
  const Eigen::MatrixXd x =
      correlate(cov.factor, standard_normals(m, cov.size(), stream));
  std::vector<LatentDraw> out;
  out.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    out.push_back(LatentDraw{x.row(j).transpose(), stream.id()});
  }
  return out;
}

CensoredDraw censor(const LatentDraw& draw,
                    const Eigen::Ref<const Eigen::VectorXd>& thresholds) {
  if (draw.values.size() != thresholds.size()) {
    throw DomainError("censor: draw and thresholds differ in length");
  }
  CensoredDraw out{draw.values};
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    if (!(out.values(i) > thresholds(i))) out.values(i) = thresholds(i);
  }
  return out;
}

void censor_rows(Eigen::Ref<Eigen::MatrixXd> block,
                 const Eigen::Ref<const Eigen::VectorXd>& thresholds) {
  if (block.cols() != thresholds.size()) {
    throw DomainError("censor_rows: block and thresholds differ in width");
  }
  for (Eigen::Index i = 0; i < block.cols(); ++i) {
    const double d = thresholds(i);
    for (Eigen::Index j = 0; j < block.rows(); ++j) {
      if (!(block(j, i) > d)) block(j, i) = d;
    }
  }
}

GaussianObservations obs_to_gaussian(const RainPanel& rain,
                                     const MarginalField& field) {
  if (rain.n_locations() != field.n_locations() ||
      rain.n_days() != field.n_days()) {
    throw DomainError("obs_to_gaussian: panel and marginal field shapes differ");
  }
  constexpr double lo = kProbabilityClip;
  constexpr double hi = 1.0 - kProbabilityClip;
  GaussianObservations out;
  out.values.resize(rain.n_locations(), rain.n_days());
  std::size_t clamped = 0;
  for (Eigen::Index t = 0; t < rain.n_days(); ++t) {
    for (Eigen::Index i = 0; i < rain.n_locations(); ++i) {
      const double y = rain.values(i, t);
      const GammaMixture& law = field.at(i, t);
      if (std::isnan(y) || y < 0.0) {
        throw DomainError("obs_to_gaussian: negative rainfall");
      }
      if (y == 0.0 && law.p < 1.0) {
        out.values(i, t) = latent_threshold(law.p);
        continue;
      }
      if (y > 0.0 && law.p == 0.0) {
        throw DomainError("obs_to_gaussian: rain observed where the marginal "
                          "has no wet mass (location " + std::to_string(i) +
                          ", day " + std::to_string(t) + ")");
      }
      double u = gm_cdf(law, y);
      if (u < lo || u > hi) {
        u = std::clamp(u, lo, hi);
        ++clamped;
      }
      out.values(i, t) = numerics::std_normal_quantile(u);
    }
  }
  if (clamped > 0) {
    out.warnings.push_back(std::to_string(clamped) +
                           " probability integral transforms clamped to "
                           "[1e-12, 1 - 1e-12]");
  }
  return out;
}

Eigen::MatrixXd latent_to_rain(const Eigen::Ref<const Eigen::MatrixXd>& latent,
                               const MarginalField& field, Eigen::Index day) {
  if (day < 0 || day >= field.n_days()) {
    throw DomainError("latent_to_rain: day out of range");
  }
  if (latent.cols() != field.n_locations()) {
    throw DomainError("latent_to_rain: latent width differs from locations");
  }
  Eigen::MatrixXd rain(latent.rows(), latent.cols());
  for (Eigen::Index i = 0; i < latent.cols(); ++i) {
    const GammaMixture& law = field.at(i, day);
    for (Eigen::Index j = 0; j < latent.rows(); ++j) {
      rain(j, i) = gm_quantile_from_gaussian(law, latent(j, i));
    }
  }
  return rain;
}

Eigen::MatrixXd joint_forecast(const CovarianceMatrix& cov,
                               const MarginalField& field, Eigen::Index day,
                               Eigen::Index m, Stream& stream) {
  if (m < 1) throw DomainError("joint_forecast: need at least one draw");
  if (cov.size() != field.n_locations()) {
    throw DomainError("joint_forecast: covariance and field sizes differ");
  }
  if (day < 0 || day >= field.n_days()) {
    throw DomainError("joint_forecast: day out of range");
  }
  const Eigen::MatrixXd latent =
      correlate(cov.factor, standard_normals(m, cov.size(), stream));
  return latent_to_rain(latent, field, day);
}

}  // namespace raincop
