#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "raincop/diagnostics.hpp"
#include "raincop/estimation.hpp"
#include "raincop/marginals.hpp"
#include "raincop/panel.hpp"
#include "raincop/spatial.hpp"
#include "raincop/synth.hpp"

namespace raincop::io {

// Readers throw IngestionError whose message names the source, the 1-based
// row (header is row 1) and the column where the problem was found.

/// Header `id,lat,lon,elev`.
LocationTable read_locations(std::istream& in, const std::string& source);
LocationTable read_locations(const std::filesystem::path& path);
void write_locations(std::ostream& out, const LocationTable& locs);

/// Wide CSV: `date,<id>...` with ids exactly matching `locs` in order.
RainPanel read_rainfall(std::istream& in, const std::string& source,
                        const LocationTable& locs);
RainPanel read_rainfall(const std::filesystem::path& path, const LocationTable& locs);
void write_rainfall(std::ostream& out, const RainPanel& panel);

/// Long CSV `date,loc,<feature names>...`; one row per (date, loc) of the
/// panel in any order. Returns rows in observation_row order.
Eigen::MatrixXd read_features(std::istream& in, const std::string& source,
                              const RainPanel& panel);
Eigen::MatrixXd read_features(const std::filesystem::path& path,
                              const RainPanel& panel);
void write_features(std::ostream& out, const Eigen::MatrixXd& features,
                    const RainPanel& panel);

/// Long CSV `date,loc,p,mu,phi` in observation_row order.
MarginalField read_marginals(std::istream& in, const std::string& source,
                             const RainPanel& panel);
MarginalField read_marginals(const std::filesystem::path& path,
                             const RainPanel& panel);
void write_marginals(std::ostream& out, const MarginalField& field,
                     const RainPanel& panel);

/// `day,replicate,loc_<id>...`; day is the date label. Observations are
/// taken from the panel.
std::vector<EnsembleBlock> read_ensemble(std::istream& in, const std::string& source,
                                         const RainPanel& panel);
std::vector<EnsembleBlock> read_ensemble(const std::filesystem::path& path,
                                         const RainPanel& panel);
void write_ensemble(std::ostream& out, const std::vector<EnsembleBlock>& blocks,
                    const RainPanel& panel);

void write_truth_json(std::ostream& out, const SynthSpec& spec);

/// `theta,score,mc_stderr`, sorted by theta.
void write_profile(std::ostream& out, const std::vector<ProfilePoint>& profile);

struct EstimationSummary {
  ThetaEstimate estimate;
  ThetaSearchSpec search;
  ScoreConfig score;
  double nu = 3.5;
  std::size_t days_scored = 0;
};
void write_estimation_summary(std::ostream& out, const EstimationSummary& summary);

struct DiagnosticsReport {
  std::vector<RocCurve> roc;
  RankHistogram rank;
  std::vector<EcdfPoint> ecdf;
  CrossCorrelation crosscorr;
  double crps = 0.0;
  VariogramSummary variogram;
  double variogram_exponent = 1.0;
  BiasSummary bias;
  std::vector<double> energy;
  double energy_beta = 0.5;
  std::size_t days = 0;
  std::size_t members = 0;
  std::vector<std::string> warnings;
};
void write_diagnostics_json(std::ostream& out, const DiagnosticsReport& report);
void write_roc_csv(std::ostream& out, const RocCurve& curve);
void write_rank_csv(std::ostream& out, const RankHistogram& hist);
void write_ecdf_csv(std::ostream& out, const std::vector<EcdfPoint>& curve);
void write_crosscorr_csv(std::ostream& out, const CrossCorrelation& cc,
                         const LocationTable& locs);

/// Opens for reading or throws IngestionError naming the path.
std::ifstream open_input(const std::filesystem::path& path);
/// Writes `content` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace raincop::io
