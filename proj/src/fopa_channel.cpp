#include "fopaeq/fopa_channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "fopaeq/errors.hpp"

namespace fopaeq {

namespace {

constexpr double kPerPs = 1e-12;  // rad/s -> rad/ps

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void FopaParams::validate() const {
  if (!finite_positive(gamma)) throw ConfigError("fopa.gamma", "must be > 0");
  if (!finite_positive(pump_power)) throw ConfigError("fopa.pump_power", "must be > 0");
  if (!finite_positive(fibre_len)) throw ConfigError("fopa.fibre_len", "must be > 0");
  if (!std::isfinite(beta2) || !std::isfinite(beta3) || !std::isfinite(beta4))
    throw ConfigError("fopa.beta", "dispersion must be finite");
  if (!finite_positive(lambda_pump)) throw ConfigError("fopa.lambda_pump", "must be > 0");
  if (!finite_positive(lambda_signal)) throw ConfigError("fopa.lambda_signal", "must be > 0");
}

double detuning_to_omega(double lambda_pump_nm, double detuning_nm) {
  const double lp = lambda_pump_nm * 1e-9;
  const double ls = (lambda_pump_nm - detuning_nm) * 1e-9;
  return 2.0 * kPi * kSpeedOfLight * (1.0 / ls - 1.0 / lp);
}

double FopaParams::delta_omega() const { return detuning_to_omega(lambda_pump, lambda_pump - lambda_signal); }

DitherSpec DitherSpec::with_default_freqs(std::vector<double> amps, std::vector<double> phases) {
  static constexpr double freqs[] = {0.1, 0.3, 0.9, 2.7};
  if (amps.size() != 4 || phases.size() != 4) throw ArgumentError("default-frequency dither needs 4 amplitudes and 4 phases");
  DitherSpec d;
  for (std::size_t k = 0; k < 4; ++k) d.tones.push_back({freqs[k], amps[k], phases[k]});
  return d;
}

DitherSpec DitherSpec::default_tones() {
  // Output of `fopaeq optimize-tones` from equal 1 rad amplitudes.
  return with_default_freqs({1.3892627725130648, 1.3345945739112481, 1.3780576961680748, 1.5000209913180875},
                          {-0.94500066057425514, 1.70524781661224, 0.092618723586264551, -0.75386702643016523});
}

double DitherSpec::period() const {
  long long g = 0;
  for (const auto& t : tones) {
    if (t.freq_ghz == 0.0) continue;
    g = std::gcd(g, std::llround(std::abs(t.freq_ghz) * 1e9));
  }
  return g == 0 ? 0.0 : 1.0 / static_cast<double>(g);
}

void DitherSpec::validate() const {
  for (const auto& t : tones) {
    if (!std::isfinite(t.freq_ghz) || t.freq_ghz <= 0.0) throw ConfigError("dither.freqs_ghz", "must be > 0");
    if (std::llround(t.freq_ghz * 1e9) <= 0) throw ConfigError("dither.freqs_ghz", "below 1 Hz");
    if (!std::isfinite(t.amp_rad)) throw ConfigError("dither.amps_rad", "must be finite");
    if (!std::isfinite(t.phase_rad)) throw ConfigError("dither.phases_rad", "must be finite");
  }
  if (!std::isfinite(time_shift)) throw ConfigError("dither.time_shift", "must be finite");
}

void StageConfig::validate() const {
  fopa.validate();
  dither.validate();
  if (!std::isfinite(span_loss_db) || span_loss_db < 0.0) throw ConfigError("stage.span_loss_db", "must be >= 0");
  if (!std::isfinite(noise_figure_db)) throw ConfigError("stage.noise_figure_db", "must be finite");
  if (!std::isfinite(pump_linewidth_hz) || pump_linewidth_hz < 0.0)
    throw ConfigError("stage.pump_linewidth_hz", "must be >= 0");
}

double pump_phase(double t, const DitherSpec& dither) {
  double phi = 0.0;
  for (const auto& k : dither.tones)
    phi += k.amp_rad * std::sin(2.0 * kPi * k.freq_ghz * 1e9 * (t - dither.time_shift) + k.phase_rad);
  return phi;
}

double pump_freq_offset(double t, const DitherSpec& dither) {
  double w = 0.0;
  for (const auto& k : dither.tones) {
    const double om = 2.0 * kPi * k.freq_ghz * 1e9;
    w += k.amp_rad * om * std::cos(om * (t - dither.time_shift) + k.phase_rad);
  }
  return w;
}

cdouble complex_gain_instantaneous(const FopaParams& fopa, double delta_omega, double pump_offset) {
  // Dispersion is taken at the instantaneous pump frequency, so the
  // mismatch picks up the odd-order term through beta2_eff.
  const double delta = pump_offset * kPerPs;
  const double w = delta_omega * kPerPs - delta;
  const double beta2_eff = fopa.beta2 + fopa.beta3 * delta + 0.5 * fopa.beta4 * delta * delta;
  const double w2 = w * w;
  const double dbeta = beta2_eff * w2 + fopa.beta4 / 12.0 * w2 * w2;

  const double gp = fopa.gamma * fopa.pump_power;
  const double kappa = dbeta + 2.0 * gp;
  const double g2 = gp * gp - 0.25 * kappa * kappa;
  const double len = fopa.fibre_len;
  const double x2 = g2 * len * len;

  double ch = 0.0;
  double sh_over_g = 0.0;  // sinh(gL)/g
  if (std::abs(x2) < 1e-3) {
    ch = 1.0 + x2 / 2.0 * (1.0 + x2 / 12.0 * (1.0 + x2 / 30.0));
    sh_over_g = len * (1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0)));
  } else if (g2 > 0.0) {
    const double g = std::sqrt(g2);
    ch = std::cosh(g * len);
    sh_over_g = std::sinh(g * len) / g;
  } else {
    const double g = std::sqrt(-g2);
    ch = std::cos(g * len);
    sh_over_g = std::sin(g * len) / g;
  }
  return {ch, 0.5 * kappa * sh_over_g};
}

cdouble complex_gain(const FopaParams& fopa, double delta_omega, double t, const DitherSpec& dither) {
  return complex_gain_instantaneous(fopa, delta_omega, pump_freq_offset(t, dither));
}

std::vector<double> period_time_grid(const DitherSpec& dither, std::size_t n) {
  if (n == 0) throw ArgumentError("period_time_grid: n must be > 0");
  const double period = dither.period();
  std::vector<double> t(n);
  if (period == 0.0) return std::vector<double>(1, 0.0);
  for (std::size_t i = 0; i < n; ++i) t[i] = period * static_cast<double>(i) / static_cast<double>(n);
  return t;
}

double mean_power_gain(const FopaParams& fopa, double delta_omega, const DitherSpec& dither, std::size_t samples) {
  const auto grid = period_time_grid(dither, samples);
  double acc = 0.0;
  for (double t : grid) acc += std::norm(complex_gain(fopa, delta_omega, t, dither));
  return acc / static_cast<double>(grid.size());
}

PeakGain peak_gain(const FopaParams& fopa, double max_detuning_nm) {
  auto gain_db = [&](double d) {
    return 10.0 * std::log10(std::norm(complex_gain_instantaneous(fopa, detuning_to_omega(fopa.lambda_pump, d), 0.0)));
  };
  constexpr double step = 0.05;
  const int n = static_cast<int>(std::ceil(max_detuning_nm / step));
  int best = 0;
  double best_db = gain_db(0.0);
  for (int i = 1; i <= n; ++i) {
    const double v = gain_db(std::min(i * step, max_detuning_nm));
    if (v > best_db) {
      best_db = v;
      best = i;
    }
  }
  const double lo = std::max(0.0, (best - 1) * step);
  const double hi = std::min(max_detuning_nm, (best + 1) * step);
  const auto r = boost::math::tools::brent_find_minima([&](double d) { return -gain_db(d); }, lo, hi, 40);
  if (-r.second > best_db) return {-r.second, r.first};
  return {best_db, best * step};
}

FopaParams calibrate_gain(double target_peak_db, FopaParams partial) {
  if (!std::isfinite(target_peak_db) || target_peak_db <= 0.0)
    throw ConfigError("fopa.peak_gain_db", "target must be > 0 dB (0 dB needs zero pump power)");
  partial.pump_power = 1.0;
  partial.validate();

  auto excess = [&](double p) {
    FopaParams q = partial;
    q.pump_power = p;
    return peak_gain(q).gain_db - target_peak_db;
  };
  double lo = 1e-6;
  double hi = 1.0;
  while (excess(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e4) throw ConfigError("fopa.peak_gain_db", "target not reachable by scaling pump power");
  }
  if (excess(lo) > 0.0) throw ConfigError("fopa.peak_gain_db", "target below the minimum reachable gain");
  boost::math::tools::eps_tolerance<double> tol(40);
  std::uintmax_t iters = 200;
  const auto root = boost::math::tools::toms748_solve(excess, lo, hi, tol, iters);
  partial.pump_power = 0.5 * (root.first + root.second);
  return partial;
}

std::vector<GainProfileRow> gain_profile_scan(const FopaParams& fopa, const DitherSpec& dither,
                                              const std::vector<double>& detuning_nm,
                                              const std::vector<double>& time_grid) {
  if (detuning_nm.empty() || time_grid.empty()) throw ArgumentError("gain_profile_scan: empty grid");
  std::vector<double> offsets(time_grid.size());
  for (std::size_t i = 0; i < time_grid.size(); ++i) offsets[i] = pump_freq_offset(time_grid[i], dither);

  const double n = static_cast<double>(time_grid.size());
  std::vector<GainProfileRow> rows;
  rows.reserve(detuning_nm.size());
  std::vector<cdouble> g(time_grid.size());
  for (double d : detuning_nm) {
    const double dw = detuning_to_omega(fopa.lambda_pump, d);
    cdouble mean(0.0, 0.0);
    double mean_abs = 0.0;
    double mean_db = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = complex_gain_instantaneous(fopa, dw, offsets[i]);
      mean += g[i];
      mean_abs += std::abs(g[i]);
      mean_db += 20.0 * std::log10(std::abs(g[i]));
    }
    mean /= n;
    mean_abs /= n;
    mean_db /= n;
    const double ref = std::arg(mean);
    double var_abs = 0.0;
    double var_ph = 0.0;
    for (const auto& v : g) {
      var_abs += (std::abs(v) - mean_abs) * (std::abs(v) - mean_abs);
      const double p = std::remainder(std::arg(v) - ref, 2.0 * kPi);
      var_ph += p * p;
    }
    rows.push_back({d, mean_db, ref, std::sqrt(var_abs / n) / mean_abs, std::sqrt(var_ph / n)});
  }
  return rows;
}

RealSeq laser_phase_noise(std::size_t n_samples, double linewidth_hz, double sample_period_s, Rng& rng) {
  if (!(linewidth_hz >= 0.0)) throw ArgumentError("laser_phase_noise: linewidth must be >= 0");
  RealSeq phi = RealSeq::Zero(static_cast<Eigen::Index>(n_samples));
  if (linewidth_hz == 0.0) return phi;
  std::normal_distribution<double> inc(0.0, std::sqrt(2.0 * kPi * linewidth_hz * sample_period_s));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    acc += inc(rng);
    phi(i) = acc;
  }
  return phi;
}

double ase_variance(const StageConfig& stage, double sample_rate) {
  if (!stage.ase) return 0.0;
  const double g = mean_power_gain(stage.fopa, stage.fopa.delta_omega(), stage.dither);
  const double nf = std::pow(10.0, stage.noise_figure_db / 10.0);
  const double nu = kSpeedOfLight / (stage.fopa.lambda_signal * 1e-9);
  return std::max(0.0, nf * g - 1.0) * kPlanck * nu * sample_rate / 2.0;
}

ComplexSeq propagate_stage(const ComplexSeq& signal, double sample_rate, const StageConfig& stage, Rng& rng,
                           double t0) {
  if (!finite_positive(sample_rate)) throw ArgumentError("propagate_stage: sample rate must be > 0");
  stage.validate();
  const double loss = std::pow(10.0, -stage.span_loss_db / 20.0);
  const double dw = stage.fopa.delta_omega();
  const double ts = 1.0 / sample_rate;
  const auto n = static_cast<std::size_t>(signal.size());

  const RealSeq pump_noise = laser_phase_noise(n, stage.pump_linewidth_hz, ts, rng);
  ComplexSeq out(signal.size());
  for (Eigen::Index i = 0; i < signal.size(); ++i) {
    const double t = t0 + static_cast<double>(i) * ts;
    const cdouble g = complex_gain(stage.fopa, dw, t, stage.dither);
    out(i) = loss * signal(i) * g * std::polar(1.0, pump_noise(i));
  }

  const double var = ase_variance(stage, sample_rate);
  if (var > 0.0) {
    std::normal_distribution<double> q(0.0, std::sqrt(var / 2.0));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      const double re = q(rng);
      const double im = q(rng);
      out(i) += cdouble(re, im);
    }
  }
  return out;
}

LinkOutput propagate_link(const ComplexSeq& signal, double sample_rate, const std::vector<StageConfig>& stages,
                          Rng& rng) {
  if (stages.empty()) throw ArgumentError("propagate_link: no stages");
  LinkOutput res;
  res.taps.reserve(stages.size());
  ComplexSeq x = signal;
  for (const auto& s : stages) {
    StageConfig stage = s;
    const double period = stage.dither.period();
    if (period > 0.0) stage.dither.time_shift = std::uniform_real_distribution<double>(0.0, period)(rng);
    res.time_shifts.push_back(stage.dither.time_shift);
    x = propagate_stage(x, sample_rate, stage, rng);
    res.taps.push_back(x);
  }
  res.output = x;
  return res;
}

}  // namespace fopaeq
