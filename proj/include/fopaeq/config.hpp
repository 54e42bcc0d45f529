#pragma once

// Experiment configuration, read from an INI-style file:
//
//   [section]
//   key = value        ; '#' or ';' starts a comment line
//
// Every key has a default; unknown sections or keys are rejected so typos
// surface as ConfigError with the dotted field path.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fopaeq/cpr_baseline.hpp"
#include "fopaeq/equalizer.hpp"
#include "fopaeq/fopa_channel.hpp"
#include "fopaeq/kernel_core.hpp"
#include "fopaeq/tone_optimizer.hpp"
#include "fopaeq/txrx_dsp.hpp"

namespace fopaeq {

struct GridSpec {
  std::vector<std::size_t> m_values{25, 50, 100};
  std::vector<double> sigma_values{1.0, 3.1622776601683795, 10.0};
  std::vector<double> lambda_values{0.01, 0.1, 1.0};
  int n_batches = 10;
  int full_batches = 50;

  void validate() const;
};

struct GainProfileSpec {
  double max_detuning_nm = 40.0;
  double step_nm = 0.25;
  std::size_t time_samples = 1024;

  void validate() const;
  std::vector<double> detuning_grid() const;
};

struct ToneSpec {
  ToneOptimizerConfig optimizer;
  double start_amp = 1.0;  // equal-amplitude, zero-phase start
  double spectral_resolution_hz = 1e6;

  void validate() const;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int n_stages = 10;
  std::size_t symbols_per_batch = 65536;
  int n_batches = 10;
  int full_batches = 100;
  double launch_power_dbm = 2.0;
  int threads = 0;  // 0 = hardware concurrency
  bool trace = false;

  KernelParams<double> kernel;
  std::size_t training_len = 2000;
  LmsConfig lms;
  ShapingConfig shaping;
  double tx_linewidth_hz = 50e3;
  double rx_linewidth_hz = 50e3;

  // pump_power and span_loss_db are resolved by resolve_config when the
  // file leaves them at "auto".
  StageConfig stage = [] {
    StageConfig s;
    s.dither = DitherSpec::default_tones();
    return s;
  }();
  double peak_gain_db = 25.0;
  bool auto_pump_power = true;
  bool auto_span_loss = true;

  GridSpec grid;
  GainProfileSpec gain_profile;
  ToneSpec tones;

  void validate() const;
  EqualizerConfig equalizer() const;
  LmsConfig lms_config() const;
};

ExperimentConfig parse_config(std::istream& is, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Calibrates the pump to peak_gain_db and sets span loss to the mean stage
// gain at the operating point, as requested by the auto flags.
void resolve_config(ExperimentConfig& cfg);

// Canonical text of the config; parse_config(write_config(c)) == c.
std::string write_config(const ExperimentConfig& cfg);

// Dither section alone, loadable via `[dither] file = ...` or as a config.
std::string write_dither_section(const DitherSpec& dither);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace fopaeq
