#pragma once

#include <filesystem>

#include "raincop/config.hpp"

namespace raincop::cli {

struct CommonOptions {
  std::filesystem::path out = ".";
  unsigned threads = 1;
  bool strict = false;
};

// Each command writes its outputs under options.out and returns the process
// exit code. Errors propagate as raincop::Error.
int cmd_synth(const RunConfig& cfg, const CommonOptions& options);
int cmd_fit_marginals(const RunConfig& cfg, const CommonOptions& options);
int cmd_estimate_theta(const RunConfig& cfg, const CommonOptions& options);
int cmd_simulate(const RunConfig& cfg, const CommonOptions& options);
int cmd_diagnose(const RunConfig& cfg, const CommonOptions& options);

}  // namespace raincop::cli
