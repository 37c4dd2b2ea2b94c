#include <CLI11.hpp>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "raincop/error.hpp"

namespace {

constexpr int kExitIngestion = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInvariant = 4;

struct Invocation {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned threads = 1;
  bool strict = false;
  std::vector<std::string> sets;
  std::map<std::string, std::string> named;
};

using Command = std::function<int(const raincop::RunConfig&,
                                  const raincop::cli::CommonOptions&)>;

CLI::App* add_command(CLI::App& app, const std::string& name,
                      const std::string& about, Invocation& inv,
                      const std::vector<std::pair<std::string, std::string>>& keys) {
  CLI::App* sub = app.add_subcommand(name, about);
  sub->add_option("--config", inv.config_path, "key=value configuration file");
  sub->add_option("--seed", inv.seed, "master seed");
  sub->add_option("--out", inv.out, "output directory")->capture_default_str();
  sub->add_option("--threads", inv.threads, "worker threads; outputs do not depend on it")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
  sub->add_flag("--strict", inv.strict, "treat warnings such as a boundary minimizer as errors");
  sub->add_option("--set", inv.sets, "override any config key, as key=value");
  for (const auto& [key, help] : keys) {
    sub->add_option("--" + key, inv.named[key], help);
  }
  return sub;
}

raincop::RunConfig build_config(const Invocation& inv) {
  raincop::RunConfig cfg;
  if (!inv.config_path.empty()) cfg = raincop::RunConfig::load(inv.config_path);
  for (const auto& kv : inv.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw raincop::IngestionError("--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [key, value] : inv.named) {
    if (!value.empty()) cfg.set(key, value);
  }
  if (inv.seed) cfg.set("seed", std::to_string(*inv.seed));
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"raincop: censored latent Gaussian copula model for daily rainfall"};
  app.require_subcommand(1);
  Invocation inv;

  const std::pair<std::string, std::string> locations{"locations", "locations CSV (id,lat,lon,elev)"};
  const std::pair<std::string, std::string> rainfall{"rainfall", "wide rainfall CSV (date,<ids>)"};
  const std::pair<std::string, std::string> marginals{"marginals", "per-cell marginals CSV"};

  std::map<CLI::App*, Command> commands;
  commands[add_command(app, "synth", "write a synthetic fixture with known truth", inv,
                       {{"n_locations", "number of locations"},
                        {"n_days", "number of days"},
                        {"theta_true", "true lengthscale"}})] = raincop::cli::cmd_synth;
  commands[add_command(app, "fit-marginals", "fit the zero-gamma regression", inv,
                       {locations, rainfall, {"features", "long features CSV (date,loc,...)"}})] =
      raincop::cli::cmd_fit_marginals;
  commands[add_command(app, "estimate-theta", "minimum energy score lengthscale", inv,
                       {locations, rainfall, marginals,
                        {"grid", "coarse grid size"},
                        {"m", "simulated replicates per day"}})] =
      raincop::cli::cmd_estimate_theta;
  commands[add_command(app, "simulate", "joint ensemble forecasts", inv,
                       {locations, rainfall, marginals,
                        {"theta", "lengthscale"},
                        {"members", "ensemble members per day"}})] = raincop::cli::cmd_simulate;
  commands[add_command(app, "diagnose", "verification diagnostics", inv,
                       {locations, rainfall, marginals, {"ensemble", "ensemble CSV"}})] =
      raincop::cli::cmd_diagnose;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitIngestion;
  }

  try {
    const raincop::RunConfig cfg = build_config(inv);
    raincop::cli::CommonOptions options{inv.out, inv.threads, inv.strict};
    for (const auto& [sub, run] : commands) {
      if (sub->parsed()) return run(cfg, options);
    }
    throw raincop::InvariantViolation("no subcommand dispatched");
  } catch (const raincop::IngestionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIngestion;
  } catch (const raincop::InvariantViolation& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const raincop::Error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIngestion;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
}
