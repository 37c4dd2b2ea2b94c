#include "raincop/synth.hpp"

#include <cmath>
#include <cstdio>

#include "raincop/copula.hpp"
#include "raincop/error.hpp"
#include "raincop/parallel.hpp"
#include "raincop/rng.hpp"

namespace raincop {
namespace {

std::string location_id(Eigen::Index i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%04lld", static_cast<long long>(i));
  return buf;
}

MarginalField build_field(const SynthSpec& spec,
                          std::optional<Eigen::MatrixXd>& features) {
  const Eigen::Index n = spec.n_locations;
  const Eigen::Index T = spec.n_days;
  switch (spec.marginal_kind) {
    case MarginalKind::kHomogeneous:
      return MarginalField(n, T, spec.homogeneous);
    case MarginalKind::kPerLocation: {
      MarginalField field(n, T);
      for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index i = 0; i < n; ++i) {
          field.at(i, t) = spec.per_location[static_cast<std::size_t>(i)];
        }
      }
      return field;
    }
    case MarginalKind::kJglm: {
      const Eigen::Index d = spec.jglm.feature_dim();
      Eigen::MatrixXd x(n * T, d);
      for (Eigen::Index t = 0; t < T; ++t) {
        Stream s(spec.seed, StreamTag::kSynthFeatures, static_cast<std::uint64_t>(t));
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index k = 0; k < d; ++k) {
            x(observation_row(i, t, n), k) = s.normal();
          }
        }
      }
      MarginalField field = predict_field(x, n, T, spec.jglm, IdentityTransform(d));
      features = std::move(x);
      return field;
    }
  }
  throw InvariantViolation("build_field: unknown marginal kind");
}

}  // namespace

void SynthSpec::validate() const {
  if (n_locations < 2) throw DomainError("SynthSpec: need at least two locations");
  if (n_days < 1) throw DomainError("SynthSpec: need at least one day");
  if (!(lat_min <= lat_max && lon_min <= lon_max && elev_min <= elev_max) ||
      lat_min < -90.0 || lat_max > 90.0 || lon_min < -180.0 || lon_max > 180.0) {
    throw DomainError("SynthSpec: invalid bounding box");
  }
  matern.validate();
  switch (marginal_kind) {
    case MarginalKind::kHomogeneous:
      homogeneous.validate();
      break;
    case MarginalKind::kPerLocation:
      if (static_cast<Eigen::Index>(per_location.size()) != n_locations) {
        throw DomainError("SynthSpec: per_location needs one law per location");
      }
      for (const auto& law : per_location) law.validate();
      break;
    case MarginalKind::kJglm:
      jglm.validate();
      break;
  }
}

LocationTable generate_locations(const SynthSpec& spec) {
  spec.validate();
  Stream s(spec.seed, StreamTag::kSynthLocations);
  LocationTable table;
  table.rows.reserve(static_cast<std::size_t>(spec.n_locations));
  for (Eigen::Index i = 0; i < spec.n_locations; ++i) {
    Location loc;
    loc.id = location_id(i);
    loc.lat = spec.lat_min + (spec.lat_max - spec.lat_min) * s.uniform();
    loc.lon = spec.lon_min + (spec.lon_max - spec.lon_min) * s.uniform();
    loc.elev = spec.elev_min + (spec.elev_max - spec.elev_min) * s.uniform();
    table.rows.push_back(std::move(loc));
  }
  return table;
}

SynthDataset simulate_dataset(const SynthSpec& spec) {
  spec.validate();
  SynthDataset data;
  data.locations = generate_locations(spec);
  data.distance = build_distance_matrix(data.locations, spec.distance);
  const CovarianceMatrix cov = build_covariance(data.distance, spec.matern);
  data.field = build_field(spec, data.features);

  const Eigen::Index n = spec.n_locations;
  const Eigen::Index T = spec.n_days;
  data.rain.values.resize(n, T);
  data.rain.location_ids = data.locations.ids();
  data.rain.day_labels =
      consecutive_dates(spec.start_date, static_cast<std::size_t>(T));
  parallel_for(static_cast<std::size_t>(T), spec.threads, [&](std::size_t t) {
    Stream s(spec.seed, StreamTag::kSynthDays, t);
    const Eigen::MatrixXd latent = correlate(cov.factor, standard_normals(1, n, s));
    data.rain.values.col(static_cast<Eigen::Index>(t)) =
        latent_to_rain(latent, data.field, static_cast<Eigen::Index>(t))
            .row(0)
            .transpose();
  });
  return data;
}

}  // namespace raincop
