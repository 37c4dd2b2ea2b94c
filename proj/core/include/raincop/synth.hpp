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

enum class MarginalKind {
  kHomogeneous,  // one GammaMixture everywhere
  kPerLocation,  // one GammaMixture per location, constant over days
  kJglm,         // JGLM coefficients applied to N(0, 1) features
};

struct SynthSpec {
  Eigen::Index n_locations = 50;
  double lat_min = 49.9;
  double lat_max = 58.7;
  double lon_min = -8.2;
  double lon_max = 1.8;
  double elev_min = 0.0;
  double elev_max = 0.0;
  Eigen::Index n_days = 500;
  MaternParams matern{450.0, 3.5};
  DistanceConfig distance;

  MarginalKind marginal_kind = MarginalKind::kHomogeneous;
  GammaMixture homogeneous{0.6, 3.0, 1.2};
  std::vector<GammaMixture> per_location;
  JglmCoefficients jglm;  // feature dimension taken from here

  std::uint64_t seed = 1;
  std::string start_date = "1999-01-01";
  unsigned threads = 1;

  void validate() const;
};

struct SynthDataset {
  LocationTable locations;
  RainPanel rain;
  MarginalField field;
  DistanceMatrix distance;
  // Raw features, rows in observation_row order; JGLM generator only.
  std::optional<Eigen::MatrixXd> features;
};

/// Uniform locations in the box; ids "s0000", "s0001", ...
LocationTable generate_locations(const SynthSpec& spec);

/// Independent days: latent x = L z from substream (seed, kSynthDays, day),
/// mapped through each cell's mixture quantile, so censored cells are 0.
SynthDataset simulate_dataset(const SynthSpec& spec);

}  // namespace raincop
