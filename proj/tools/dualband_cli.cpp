// dualband: PSF characterization, delay profiles, single-shot estimation and
// Monte-Carlo sweeps for dual-band OFDM delay estimation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "dualband/cli/commands.hpp"
#include "dualband/cli/config.hpp"

namespace {

namespace fs = std::filesystem;
using namespace dualband;
using namespace dualband::cli;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitUsage = 3;

struct Options {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = default_thread_count();
  std::string preset;
  std::optional<std::string> method;
  std::optional<std::size_t> lmax;
  std::optional<double> epsilon;
  std::optional<std::size_t> osf;
  std::optional<double> snr_db;
  std::optional<std::size_t> trials;
  bool no_noise = false;
  bool metrics = false;
  bool emit_profiles = false;
  std::string scf_out;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "", "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig resolve(const Options& o) {
  RunConfig cfg = o.preset.empty() ? RunConfig{} : preset(o.preset);
  if (!o.config_path.empty()) cfg = parse_config(read_file(o.config_path), cfg);
  if (!o.out.empty()) cfg.out = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.method) {
    cfg.method = *o.method;
    cfg.methods.clear();
  }
  if (o.lmax) cfg.L_max = *o.lmax;
  if (o.epsilon) cfg.epsilon = *o.epsilon;
  if (o.osf) cfg.osf = *o.osf;
  if (o.snr_db) cfg.snr_db = *o.snr_db;
  if (o.trials) cfg.trials = *o.trials;
  if (o.no_noise) cfg.snr_db = kNoiseFreeSnrDb;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ParseError(0, "", e.what());
  }
  return cfg;
}

std::unique_ptr<std::ofstream> open_out(const fs::path& path) {
  auto f = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  return out.parent_path() / (out.stem().string() + suffix + ".csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-band OFDM delay estimation: PSF analysis, RELAX/OMP/MLE estimation and Monte-Carlo sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config_path, "key = value configuration file");
  app.add_option("--out", o.out, "output CSV path (default: stdout)");
  app.add_option("--seed", o.seed, "master RNG seed");
  app.add_option("--threads", o.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--preset", o.preset, "experiment preset")->check(CLI::IsMember(preset_names()));
  app.add_option("--method", o.method, "estimator")->check(CLI::IsMember({"relax", "omp", "mle"}));
  app.add_option("--lmax", o.lmax, "maximum number of components");
  app.add_option("--epsilon", o.epsilon, "residual-energy stopping threshold");
  app.add_option("--osf", o.osf, "delay-grid oversampling factor");
  app.add_option("--snr", o.snr_db, "per-subcarrier SNR in dB");
  app.add_option("--trials", o.trials, "Monte-Carlo trials per sweep point");
  app.add_flag("--no-noise", o.no_noise, "noiseless measurement");

  auto* psf_cmd = app.add_subcommand("psf", "SCF-induced point-spread function of the dual-band layout");
  psf_cmd->add_flag("--metrics", o.metrics, "append first null / peak sidelobe metrics");
  psf_cmd->add_option("--scf-out", o.scf_out, "write the SCF (index, W) CSV here");
  auto* profile_cmd = app.add_subcommand("profile", "IDFT delay profile of one seeded measurement");
  auto* estimate_cmd = app.add_subcommand("estimate", "run one seeded trial through an estimator");
  estimate_cmd->add_flag("--emit-profiles", o.emit_profiles,
                         "also write raw and reconstructed delay profiles next to --out");
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo RMSE sweep over SNR or subband gap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const RunConfig cfg = resolve(o);
    std::unique_ptr<std::ofstream> file;
    std::ostream* os = &std::cout;
    if (!cfg.out.empty()) {
      file = open_out(cfg.out);
      os = file.get();
    }

    if (psf_cmd->parsed()) {
      std::unique_ptr<std::ofstream> scf;
      if (!o.scf_out.empty()) {
        scf = open_out(o.scf_out);
      } else if (!cfg.out.empty()) {
        scf = open_out(sibling(cfg.out, "_scf"));
      }
      cmd_psf(cfg, *os, o.metrics, scf.get());
    } else if (profile_cmd->parsed()) {
      cmd_profile(cfg, *os);
    } else if (estimate_cmd->parsed()) {
      EstimateOutputs extra;
      std::unique_ptr<std::ofstream> raw, recon;
      if (o.emit_profiles) {
        if (cfg.out.empty()) {
          std::cerr << "error: --emit-profiles needs --out to name the profile files\n";
          return kExitUsage;
        }
        raw = open_out(sibling(cfg.out, "_raw_profile"));
        recon = open_out(sibling(cfg.out, "_reconstructed_profile"));
        extra = {raw.get(), recon.get()};
      }
      cmd_estimate(cfg, *os, extra);
    } else if (sweep_cmd->parsed()) {
      cmd_sweep(cfg, *os, o.threads);
    }
    os->flush();
    if (!*os) throw std::runtime_error("failed writing output");
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
