#include "fopaeq/tone_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>

#include <unsupported/Eigen/FFT>

#include "fopaeq/errors.hpp"

namespace fopaeq {

namespace {

std::vector<double> spectrum_powers(const DitherSpec& dither, int n) {
  const double period = dither.period();
  std::vector<std::complex<double>> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = period * i / n;
    x[static_cast<std::size_t>(i)] = std::polar(1.0, pump_phase(t, dither));
  }
  std::vector<std::complex<double>> c;
  Eigen::FFT<double> fft;
  fft.fwd(c, x);
  std::vector<double> p(c.size());
  const double scale = 1.0 / (static_cast<double>(n) * n);
  for (std::size_t i = 0; i < c.size(); ++i) p[i] = std::norm(c[i]) * scale;
  return p;
}

void check_fft_size(int n) {
  if (n < 8 || (n & (n - 1)) != 0) throw ArgumentError("fft size must be a power of two >= 8");
}

}  // namespace

int retained_half_width(const DitherSpec& dither) {
  const double period = dither.period();
  if (period == 0.0) return 0;
  double sum = 0.0;
  for (const auto& t : dither.tones) sum += t.freq_ghz * 1e9;
  return static_cast<int>(std::llround(sum * period));
}

CombSpectrum comb_spectrum(const DitherSpec& dither, int fft_size) {
  check_fft_size(fft_size);
  if (dither.tones.empty()) throw ArgumentError("comb_spectrum: no tones");
  const auto p = spectrum_powers(dither, fft_size);
  CombSpectrum s;
  s.base_freq_hz = 1.0 / dither.period();
  for (int k = -fft_size / 2; k < fft_size / 2; ++k) {
    s.index.push_back(k);
    s.power.push_back(p[static_cast<std::size_t>((k + fft_size) % fft_size)]);
  }
  return s;
}

std::vector<double> retained_line_powers(const DitherSpec& dither, int fft_size) {
  check_fft_size(fft_size);
  if (dither.tones.empty()) throw ArgumentError("retained_line_powers: no tones");
  const int half = retained_half_width(dither);
  if (2 * half + 1 > fft_size / 2) throw ArgumentError("fft size too small for the retained band");
  const auto p = spectrum_powers(dither, fft_size);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * half + 1));
  for (int k = -half; k <= half; ++k) out.push_back(p[static_cast<std::size_t>((k + fft_size) % fft_size)]);
  return out;
}

double raw_line_power_variance(const std::vector<double>& powers) {
  if (powers.empty()) return 0.0;
  const double n = static_cast<double>(powers.size());
  const double mean = std::accumulate(powers.begin(), powers.end(), 0.0) / n;
  double v = 0.0;
  for (double p : powers) v += (p - mean) * (p - mean);
  return v / n;
}

double line_power_objective(const std::vector<double>& powers) {
  if (powers.empty()) return 0.0;
  const double mean = std::accumulate(powers.begin(), powers.end(), 0.0) / static_cast<double>(powers.size());
  if (mean <= 0.0) return 0.0;
  return raw_line_power_variance(powers) / (mean * mean);
}

double line_ripple_db(const std::vector<double>& powers) {
  if (powers.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(powers.begin(), powers.end());
  if (*lo <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(*hi / *lo);
}

ToneOptimizerResult optimize_tones(const DitherSpec& base, double pump_linewidth_hz, double spectral_resolution_hz,
                                   const ToneOptimizerConfig& cfg) {
  if (base.tones.empty()) throw ArgumentError("optimize_tones: at least one tone must be free");
  if (!(pump_linewidth_hz >= 0.0)) throw ArgumentError("optimize_tones: linewidth must be >= 0");
  if (!(spectral_resolution_hz >= 0.0)) throw ArgumentError("optimize_tones: resolution must be >= 0");
  if (cfg.restarts < 1 || cfg.max_sweeps < 1 || !(cfg.initial_step > 0.0) || !(cfg.min_step > 0.0))
    throw ArgumentError("optimize_tones: bad optimiser budget");
  base.validate();
  check_fft_size(cfg.fft_size);

  const std::size_t nt = base.tones.size();
  const std::size_t dim = 2 * nt;
  ToneOptimizerResult res;

  auto to_spec = [&](const std::vector<double>& v) {
    DitherSpec d = base;
    for (std::size_t k = 0; k < nt; ++k) {
      d.tones[k].amp_rad = v[k];
      d.tones[k].phase_rad = v[nt + k];
    }
    return d;
  };
  auto objective = [&](const std::vector<double>& v) {
    ++res.evaluations;
    return line_power_objective(retained_line_powers(to_spec(v), cfg.fft_size));
  };

  std::vector<double> start(dim);
  for (std::size_t k = 0; k < nt; ++k) {
    start[k] = base.tones[k].amp_rad;
    start[nt + k] = base.tones[k].phase_rad;
  }
  res.objective_start = objective(start);

  std::vector<double> best = start;
  double best_f = res.objective_start;
  Rng rng = make_stream(cfg.seed, {0x746f6e65});
  std::uniform_real_distribution<double> amp_jitter(0.8, 1.2);
  std::uniform_real_distribution<double> phase_jitter(-kPi, kPi);

  bool all_converged = true;
  for (int r = 0; r < cfg.restarts; ++r) {
    std::vector<double> x = best;
    if (r > 0) {
      for (std::size_t k = 0; k < nt; ++k) {
        x[k] *= amp_jitter(rng);
        x[nt + k] += phase_jitter(rng);
      }
    }
    double fx = objective(x);
    double step = cfg.initial_step;
    bool converged = false;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      bool improved = false;
      for (std::size_t i = 0; i < dim; ++i) {
        for (double dir : {1.0, -1.0}) {
          std::vector<double> y = x;
          y[i] += dir * step;
          const double fy = objective(y);
          if (fy < fx) {
            x = std::move(y);
            fx = fy;
            improved = true;
            break;
          }
        }
      }
      if (!improved) {
        step *= 0.5;
        if (step < cfg.min_step) {
          converged = true;
          break;
        }
      }
    }
    all_converged = all_converged && converged;
    if (fx < best_f) {
      best_f = fx;
      best = x;
    }
  }

  // Canonical form: non-negative amplitudes, phases in (-pi, pi].
  for (std::size_t k = 0; k < nt; ++k) {
    if (best[k] < 0.0) {
      best[k] = -best[k];
      best[nt + k] += kPi;
    }
    best[nt + k] = std::remainder(best[nt + k], 2.0 * kPi);
  }
  res.spec = to_spec(best);
  res.objective_best = line_power_objective(retained_line_powers(res.spec, cfg.fft_size));
  res.reduction_db = res.objective_best > 0.0 ? 10.0 * std::log10(res.objective_start / res.objective_best)
                                              : std::numeric_limits<double>::infinity();
  res.ripple_db = line_ripple_db(retained_line_powers(res.spec, cfg.fft_size));
  res.converged = all_converged;
  return res;
}

}  // namespace fopaeq
