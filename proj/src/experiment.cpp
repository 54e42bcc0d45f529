#include "fopaeq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <boost/version.hpp>
#include <json.hpp>

#include "fopaeq/cpr_baseline.hpp"
#include "fopaeq/equalizer.hpp"
#include "fopaeq/errors.hpp"
#include "fopaeq/io.hpp"
#include "fopaeq/rng.hpp"

namespace fopaeq {

namespace {

enum Purpose : std::uint64_t { kBits = 0, kTxLaser = 1, kLink = 2, kRxLaser = 3 };

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Bits random_bits(std::size_t n, Rng& rng) {
  Bits bits(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = rng();
    bits[i] = static_cast<std::uint8_t>(word & 1u);
    word >>= 1;
  }
  return bits;
}

void apply_phase(ComplexSeq& x, const RealSeq& phi, double sign) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) *= std::polar(1.0, sign * phi(i));
}

BerStats aggregate(const std::vector<std::size_t>& errors, std::size_t bits_per_batch) {
  BerStats s;
  const std::size_t nb = errors.size();
  s.errors = std::accumulate(errors.begin(), errors.end(), std::size_t{0});
  s.bits = bits_per_batch * nb;
  s.ber = s.bits ? static_cast<double>(s.errors) / static_cast<double>(s.bits) : 0.0;
  if (nb >= 2) {
    double var = 0.0;
    for (auto e : errors) {
      const double b = static_cast<double>(e) / static_cast<double>(bits_per_batch);
      var += (b - s.ber) * (b - s.ber);
    }
    var /= static_cast<double>(nb - 1);
    s.se = std::sqrt(var / static_cast<double>(nb));
  } else if (s.bits) {
    s.se = std::sqrt(s.ber * (1.0 - s.ber) / static_cast<double>(s.bits));
  }
  return s;
}

struct Region {
  Eigen::Index start = 0;
  Eigen::Index len = 0;
};

Region dd_region(const ExperimentConfig& cfg, Eigen::Index n) {
  const auto start = std::min<Eigen::Index>(static_cast<Eigen::Index>(cfg.training_len), n);
  return {start, n - start};
}

std::size_t bit_errors(const BatchChannel& ch, const ComplexSeq& decided, Region reg) {
  const Bits rx = demap_symbols(decided.segment(reg.start, reg.len));
  const std::span<const std::uint8_t> tx(ch.tx_bits.data() + 4 * reg.start, 4 * static_cast<std::size_t>(reg.len));
  return count_ber(tx, rx).errors;
}

RmsDeviation static_rms(const ComplexSeq& tx, const ComplexSeq& rx) {
  cdouble h(0.0, 0.0);
  for (Eigen::Index i = 0; i < tx.size(); ++i) h += rx(i) / tx(i);
  h /= static_cast<double>(std::max<Eigen::Index>(tx.size(), 1));
  return rms_deviation(tx, rx / h);
}

struct BatchStage {
  std::size_t err_kernel = 0;
  std::size_t err_lms = 0;
  RmsDeviation rms_kernel, rms_lms, rms_static;
  std::size_t skipped = 0;
  std::size_t clamped = 0;
};

std::vector<BatchStage> equalize_batch(const ExperimentConfig& cfg, const BatchChannel& ch) {
  const EqualizerConfig eq = cfg.equalizer();
  const LmsConfig lms = cfg.lms_config();
  std::vector<BatchStage> out(ch.rx_symbols.size());
  for (std::size_t s = 0; s < ch.rx_symbols.size(); ++s) {
    const ComplexSeq& r = ch.rx_symbols[s];
    const Region reg = dd_region(cfg, r.size());
    const BlockResult k = run_block(r, ch.tx_symbols, eq);
    const BlockResult l = run_block_lms(r, ch.tx_symbols, lms);
    auto& o = out[s];
    o.err_kernel = bit_errors(ch, k.trace.decided, reg);
    o.err_lms = bit_errors(ch, l.trace.decided, reg);
    const ComplexSeq tx = ch.tx_symbols.segment(reg.start, reg.len);
    o.rms_kernel = rms_deviation(tx, k.corrected.segment(reg.start, reg.len));
    o.rms_lms = rms_deviation(tx, l.corrected.segment(reg.start, reg.len));
    o.rms_static = static_rms(tx, r.segment(reg.start, reg.len));
    o.skipped = k.trace.skipped_updates;
    o.clamped = k.trace.clamped;
  }
  return out;
}

RmsDeviation mean_rms(const std::vector<RmsDeviation>& v) {
  RmsDeviation m;
  for (const auto& r : v) {
    m.rms_phase += r.rms_phase;
    m.rms_amp += r.rms_amp;
    m.classes_used += r.classes_used;
    m.empty_classes += r.empty_classes;
  }
  if (!v.empty()) {
    m.rms_phase /= static_cast<double>(v.size());
    m.rms_amp /= static_cast<double>(v.size());
  }
  return m;
}

std::vector<StageConfig> link_stages(const ExperimentConfig& cfg) {
  return std::vector<StageConfig>(static_cast<std::size_t>(cfg.n_stages), cfg.stage);
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
  std::ofstream os(dir / name);
  if (!os) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
  return os;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

nlohmann::ordered_json manifest_base(const std::string& command, const ExperimentConfig& cfg,
                                     const CommandOptions& opts) {
  nlohmann::ordered_json m;
  m["tool"] = "fopaeq";
  m["version"] = version_string();
  m["command"] = command;
  m["config_path"] = opts.config.string();
  m["config_hash"] = "fnv1a64:" + hex64(fnv1a64(write_config(cfg)));
  m["seed"] = cfg.seed;
  m["full"] = opts.full;
  m["versions"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION},
                   {"compiler", __VERSION__},
                   {"csv_schema", 1}};
  return m;
}

void write_manifest(const std::filesystem::path& dir, const nlohmann::ordered_json& m) {
  auto os = open_out(dir, "manifest.json");
  os << m.dump(2) << "\n";
}

void write_resolved(const std::filesystem::path& dir, const ExperimentConfig& cfg) {
  auto os = open_out(dir, "config_resolved.cfg");
  os << write_config(cfg);
}

void log(const CommandOptions& opts, const std::string& msg) {
  if (!opts.quiet) std::cerr << msg << "\n";
}

}  // namespace

std::string version_string() { return "1.0.0"; }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

BatchChannel simulate_batch(const ExperimentConfig& cfg, int batch, const std::vector<int>& stages) {
  const auto b = static_cast<std::uint64_t>(batch);
  BatchChannel ch;
  if (stages.empty()) {
    for (int s = 1; s <= cfg.n_stages; ++s) ch.stages.push_back(s);
  } else {
    ch.stages = stages;
  }
  for (int s : ch.stages)
    if (s < 1 || s > cfg.n_stages) throw ArgumentError("simulate_batch: stage out of range");

  Rng bit_rng = make_stream(cfg.seed, {b, kBits});
  ch.tx_bits = random_bits(4 * cfg.symbols_per_batch, bit_rng);
  ch.tx_symbols = map_bits(ch.tx_bits);

  const double fs = cfg.shaping.sample_rate();
  ComplexSeq x = rrc_shape(ch.tx_symbols, cfg.shaping);
  const double launch_w = 1e-3 * std::pow(10.0, cfg.launch_power_dbm / 10.0);
  x *= std::sqrt(launch_w / x.squaredNorm() * static_cast<double>(x.size()));

  Rng tx_rng = make_stream(cfg.seed, {b, kTxLaser});
  apply_phase(x, laser_phase_noise(static_cast<std::size_t>(x.size()), cfg.tx_linewidth_hz, 1.0 / fs, tx_rng), 1.0);

  Rng link_rng = make_stream(cfg.seed, {b, kLink});
  const LinkOutput link = propagate_link(x, fs, link_stages(cfg), link_rng);

  Rng rx_rng = make_stream(cfg.seed, {b, kRxLaser});
  const RealSeq lo = laser_phase_noise(static_cast<std::size_t>(x.size()), cfg.rx_linewidth_hz, 1.0 / fs, rx_rng);
  for (int s : ch.stages) {
    ComplexSeq y = link.taps[static_cast<std::size_t>(s - 1)];
    apply_phase(y, lo, -1.0);
    const ComplexSeq mf = rrc_matched_filter(y, cfg.shaping);
    ch.rx_symbols.push_back(normalize_power(decimate(mf, cfg.shaping.samples_per_symbol)));
  }
  return ch;
}

RunMetrics run_simulation(const ExperimentConfig& cfg, int n_batches) {
  if (n_batches < 1) throw ArgumentError("run_simulation: n_batches must be >= 1");
  const auto t0 = Clock::now();
  std::vector<std::vector<BatchStage>> per_batch(static_cast<std::size_t>(n_batches));
  parallel_for(per_batch.size(), cfg.threads, [&](std::size_t b) {
    const BatchChannel ch = simulate_batch(cfg, static_cast<int>(b));
    per_batch[b] = equalize_batch(cfg, ch);
  });

  RunMetrics m;
  m.n_batches = n_batches;
  const Region reg = dd_region(cfg, static_cast<Eigen::Index>(cfg.symbols_per_batch));
  const std::size_t bits = 4 * static_cast<std::size_t>(reg.len);
  for (int s = 0; s < cfg.n_stages; ++s) {
    std::vector<std::size_t> ek, el;
    std::vector<RmsDeviation> rk, rl, rs;
    StageMetrics sm;
    sm.stage = s + 1;
    for (const auto& batch : per_batch) {
      const auto& bs = batch[static_cast<std::size_t>(s)];
      ek.push_back(bs.err_kernel);
      el.push_back(bs.err_lms);
      rk.push_back(bs.rms_kernel);
      rl.push_back(bs.rms_lms);
      rs.push_back(bs.rms_static);
      sm.skipped_updates += bs.skipped;
      sm.clamped += bs.clamped;
    }
    sm.kernel = aggregate(ek, bits);
    sm.lms = aggregate(el, bits);
    sm.rms_kernel = mean_rms(rk);
    sm.rms_lms = mean_rms(rl);
    sm.rms_static = mean_rms(rs);
    m.stages.push_back(sm);
  }
  m.runtime_s = seconds_since(t0);
  return m;
}

GridResult run_grid(const ExperimentConfig& cfg, int n_batches) {
  if (n_batches < 1) throw ArgumentError("run_grid: n_batches must be >= 1");
  cfg.grid.validate();
  const auto t0 = Clock::now();
  std::vector<BatchChannel> channels(static_cast<std::size_t>(n_batches));
  parallel_for(channels.size(), cfg.threads,
               [&](std::size_t b) { channels[b] = simulate_batch(cfg, static_cast<int>(b), {cfg.n_stages}); });

  const Region reg = dd_region(cfg, static_cast<Eigen::Index>(cfg.symbols_per_batch));
  const std::size_t bits = 4 * static_cast<std::size_t>(reg.len);

  GridResult g;
  g.n_batches = n_batches;
  for (auto m : cfg.grid.m_values)
    for (double s : cfg.grid.sigma_values)
      for (double l : cfg.grid.lambda_values) g.cells.push_back({m, s, l, {}});

  parallel_for(g.cells.size() + 1, cfg.threads, [&](std::size_t i) {
    std::vector<std::size_t> errs;
    if (i == g.cells.size()) {
      const LmsConfig lms = cfg.lms_config();
      for (const auto& ch : channels)
        errs.push_back(bit_errors(ch, run_block_lms(ch.rx_symbols[0], ch.tx_symbols, lms).trace.decided, reg));
      g.lms = aggregate(errs, bits);
      return;
    }
    EqualizerConfig eq = cfg.equalizer();
    eq.kernel.window_m = g.cells[i].m;
    eq.kernel.sigma = g.cells[i].sigma;
    eq.kernel.lambda = g.cells[i].lambda;
    for (const auto& ch : channels)
      errs.push_back(bit_errors(ch, run_block(ch.rx_symbols[0], ch.tx_symbols, eq).trace.decided, reg));
    g.cells[i].ber = aggregate(errs, bits);
  });

  for (std::size_t i = 1; i < g.cells.size(); ++i)
    if (g.cells[i].ber.errors < g.cells[g.argmin].ber.errors) g.argmin = i;
  g.runtime_s = seconds_since(t0);
  return g;
}

ExperimentConfig prepare_config(const CommandOptions& opts) {
  ExperimentConfig cfg = opts.config.empty() ? ExperimentConfig{} : load_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.full) {
    cfg.n_batches = cfg.full_batches;
    cfg.grid.n_batches = cfg.grid.full_batches;
  }
  resolve_config(cfg);
  return cfg;
}

RunMetrics cmd_simulate(const CommandOptions& opts) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = prepare_config(opts);
  std::filesystem::create_directories(opts.out);
  log(opts, "simulate: " + std::to_string(cfg.n_batches) + " batches x " + std::to_string(cfg.symbols_per_batch) +
                " symbols, " + std::to_string(cfg.n_stages) + " stages");
  const RunMetrics m = run_simulation(cfg, cfg.n_batches);

  {
    auto os = open_out(opts.out, "ber.csv");
    io::CsvWriter w(os, "fopaeq.ber/1",
                    {"stage", "ber_kernel", "se_kernel", "errors_kernel", "ber_lms", "se_lms", "errors_lms", "bits",
                     "skipped_kernel", "clamped_kernel"});
    for (const auto& s : m.stages) {
      w << s.stage << s.kernel.ber << s.kernel.se << s.kernel.errors << s.lms.ber << s.lms.se << s.lms.errors
        << s.kernel.bits << s.skipped_updates << s.clamped;
      w.end_row();
    }
  }
  {
    auto os = open_out(opts.out, "rms.csv");
    io::CsvWriter w(os, "fopaeq.rms/1",
                    {"stage", "rms_phase_kernel", "rms_amp_kernel", "rms_phase_lms", "rms_amp_lms",
                     "rms_phase_static", "rms_amp_static"});
    for (const auto& s : m.stages) {
      w << s.stage << s.rms_kernel.rms_phase << s.rms_kernel.rms_amp << s.rms_lms.rms_phase << s.rms_lms.rms_amp
        << s.rms_static.rms_phase << s.rms_static.rms_amp;
      w.end_row();
    }
  }
  std::vector<std::string> outputs{"ber.csv", "rms.csv", "config_resolved.cfg"};
  if (cfg.trace) {
    const BatchChannel ch = simulate_batch(cfg, 0, {cfg.n_stages});
    auto k = open_out(opts.out, "trace_kernel.csv");
    write_trace_csv(k, run_block(ch.rx_symbols[0], ch.tx_symbols, cfg.equalizer()).trace);
    auto l = open_out(opts.out, "trace_lms.csv");
    write_trace_csv(l, run_block_lms(ch.rx_symbols[0], ch.tx_symbols, cfg.lms_config()).trace);
    outputs.push_back("trace_kernel.csv");
    outputs.push_back("trace_lms.csv");
  }
  write_resolved(opts.out, cfg);

  auto man = manifest_base("simulate", cfg, opts);
  man["n_batches"] = cfg.n_batches;
  man["symbols_per_batch"] = cfg.symbols_per_batch;
  man["outputs"] = outputs;
  const auto& last = m.stages.back();
  std::size_t skipped = 0;
  for (const auto& s : m.stages) skipped += s.skipped_updates;
  man["summary"] = {{"final_stage", last.stage},
                    {"ber_kernel", last.kernel.ber},
                    {"ber_lms", last.lms.ber},
                    {"skipped_updates", skipped}};
  man["runtime_s"] = seconds_since(t0);
  write_manifest(opts.out, man);
  log(opts, "stage " + std::to_string(last.stage) + ": BER kernel " + io::format_double(last.kernel.ber) +
                ", LMS " + io::format_double(last.lms.ber));
  return m;
}

GridResult cmd_gridsearch(const CommandOptions& opts) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = prepare_config(opts);
  std::filesystem::create_directories(opts.out);
  const GridResult g = run_grid(cfg, cfg.grid.n_batches);
  {
    auto os = open_out(opts.out, "grid.csv");
    io::CsvWriter w(os, "fopaeq.grid/1", {"m", "sigma", "lambda", "ber", "se", "errors", "bits", "argmin"});
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
      const auto& c = g.cells[i];
      w << c.m << c.sigma << c.lambda << c.ber.ber << c.ber.se << c.ber.errors << c.ber.bits
        << (i == g.argmin ? 1 : 0);
      w.end_row();
    }
  }
  write_resolved(opts.out, cfg);
  auto man = manifest_base("gridsearch", cfg, opts);
  const auto& best = g.cells[g.argmin];
  man["n_batches"] = g.n_batches;
  man["outputs"] = {"grid.csv", "config_resolved.cfg"};
  man["summary"] = {{"argmin", {{"m", best.m}, {"sigma", best.sigma}, {"lambda", best.lambda}, {"ber", best.ber.ber}}},
                    {"ber_lms", g.lms.ber}};
  man["runtime_s"] = seconds_since(t0);
  write_manifest(opts.out, man);
  log(opts, "grid argmin: M=" + std::to_string(best.m) + " sigma=" + io::format_double(best.sigma) +
                " lambda=" + io::format_double(best.lambda) + " BER " + io::format_double(best.ber.ber));
  return g;
}

std::vector<GainProfileRow> cmd_gain_profile(const CommandOptions& opts) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = prepare_config(opts);
  std::filesystem::create_directories(opts.out);
  const auto grid = cfg.gain_profile.detuning_grid();
  const auto rows = gain_profile_scan(cfg.stage.fopa, cfg.stage.dither, grid,
                                      period_time_grid(cfg.stage.dither, cfg.gain_profile.time_samples));
  double peak = -1e300;
  double peak_at = 0.0;
  {
    auto os = open_out(opts.out, "gain_profile.csv");
    io::CsvWriter w(os, "fopaeq.gain_profile/1",
                    {"detuning_nm", "static_gain_db", "mean_amp_db", "mean_phase_rad", "rms_amp", "rms_phase_rad"});
    for (const auto& r : rows) {
      const double st = 10.0 * std::log10(std::norm(
          complex_gain_instantaneous(cfg.stage.fopa, detuning_to_omega(cfg.stage.fopa.lambda_pump, r.detuning_nm), 0.0)));
      if (st > peak) {
        peak = st;
        peak_at = r.detuning_nm;
      }
      w << r.detuning_nm << st << r.mean_amp_db << r.mean_phase << r.rms_amp << r.rms_phase;
      w.end_row();
    }
  }
  write_resolved(opts.out, cfg);
  auto man = manifest_base("gain-profile", cfg, opts);
  man["outputs"] = {"gain_profile.csv", "config_resolved.cfg"};
  man["summary"] = {{"pump_power_w", cfg.stage.fopa.pump_power},
                    {"peak_static_gain_db", peak},
                    {"peak_detuning_nm", peak_at},
                    {"rows", rows.size()}};
  man["runtime_s"] = seconds_since(t0);
  write_manifest(opts.out, man);
  log(opts, "gain profile: peak " + io::format_double(peak) + " dB at " + io::format_double(peak_at) + " nm");
  return rows;
}

ToneOptimizerResult cmd_optimize_tones(const CommandOptions& opts) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = prepare_config(opts);
  std::filesystem::create_directories(opts.out);
  DitherSpec start = cfg.stage.dither;
  for (auto& t : start.tones) {
    t.amp_rad = cfg.tones.start_amp;
    t.phase_rad = 0.0;
  }
  const ToneOptimizerResult res =
      optimize_tones(start, cfg.stage.pump_linewidth_hz, cfg.tones.spectral_resolution_hz, cfg.tones.optimizer);
  if (!res.converged)
    std::cerr << "warning: tone optimiser budget exhausted; writing best-so-far spec\n";

  {
    auto os = open_out(opts.out, "tones.cfg");
    os << "# fopaeq optimize-tones, objective " << io::format_double(res.objective_best) << "\n"
       << write_dither_section(res.spec);
  }
  {
    const CombSpectrum before = comb_spectrum(start, cfg.tones.optimizer.fft_size);
    const CombSpectrum after = comb_spectrum(res.spec, cfg.tones.optimizer.fft_size);
    const int half = retained_half_width(res.spec);
    auto os = open_out(opts.out, "spectrum.csv");
    io::CsvWriter w(os, "fopaeq.spectrum/1", {"k", "freq_ghz", "power_start", "power_opt", "retained"});
    for (std::size_t i = 0; i < after.index.size(); ++i) {
      const int k = after.index[i];
      w << k << k * after.base_freq_hz / 1e9 << before.power[i] << after.power[i] << (std::abs(k) <= half ? 1 : 0);
      w.end_row();
    }
  }
  write_resolved(opts.out, cfg);
  auto man = manifest_base("optimize-tones", cfg, opts);
  man["outputs"] = {"tones.cfg", "spectrum.csv", "config_resolved.cfg"};
  man["summary"] = {{"objective_start", res.objective_start},
                    {"objective_best", res.objective_best},
                    {"reduction_db", res.reduction_db},
                    {"ripple_db", res.ripple_db},
                    {"evaluations", res.evaluations},
                    {"converged", res.converged}};
  man["runtime_s"] = seconds_since(t0);
  write_manifest(opts.out, man);
  log(opts, "tones: variance reduced by " + io::format_double(res.reduction_db) + " dB, ripple " +
                io::format_double(res.ripple_db) + " dB");
  return res;
}

}  // namespace fopaeq
