#pragma once

// Experiment orchestration: tx -> cascade -> rx -> {kernel, LMS}, grid
// search, gain-profile export and tone optimisation, with CSV/manifest output.
//
// Batch b draws everything from make_stream(seed, {b, purpose}), so batches
// are independent realisations and results do not depend on thread count.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fopaeq/config.hpp"
#include "fopaeq/txrx_dsp.hpp"

namespace fopaeq {

struct BerStats {
  std::size_t errors = 0;
  std::size_t bits = 0;
  double ber = 0.0;
  double se = 0.0;  // standard error across batches
};

struct StageMetrics {
  int stage = 0;
  BerStats kernel;
  BerStats lms;
  RmsDeviation rms_kernel;
  RmsDeviation rms_lms;
  RmsDeviation rms_static;  // received symbols after one genie complex scale
  std::size_t skipped_updates = 0;
  std::size_t clamped = 0;
};

struct RunMetrics {
  std::vector<StageMetrics> stages;
  int n_batches = 0;
  double runtime_s = 0.0;
};

// Received symbols of one batch at the requested stage taps.
struct BatchChannel {
  ComplexSeq tx_symbols;
  Bits tx_bits;
  std::vector<int> stages;           // 1-based stage numbers
  std::vector<ComplexSeq> rx_symbols;  // matched-filtered, decimated, unit power
};

// `cfg` must be resolved. Empty `stages` means all of 1..n_stages.
BatchChannel simulate_batch(const ExperimentConfig& cfg, int batch, const std::vector<int>& stages = {});

RunMetrics run_simulation(const ExperimentConfig& cfg, int n_batches);

struct GridCell {
  std::size_t m = 0;
  double sigma = 0.0;
  double lambda = 0.0;
  BerStats ber;
};

struct GridResult {
  std::vector<GridCell> cells;  // m-major, then sigma, then lambda
  std::size_t argmin = 0;
  BerStats lms;
  int n_batches = 0;
  double runtime_s = 0.0;
};

GridResult run_grid(const ExperimentConfig& cfg, int n_batches);

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  bool full = false;
  bool quiet = false;
};

// Each command writes its CSVs plus manifest.json into opts.out.
RunMetrics cmd_simulate(const CommandOptions& opts);
GridResult cmd_gridsearch(const CommandOptions& opts);
std::vector<GainProfileRow> cmd_gain_profile(const CommandOptions& opts);
ToneOptimizerResult cmd_optimize_tones(const CommandOptions& opts);

// Loads, applies --seed/--full and resolves auto fields.
ExperimentConfig prepare_config(const CommandOptions& opts);

std::string version_string();

}  // namespace fopaeq
