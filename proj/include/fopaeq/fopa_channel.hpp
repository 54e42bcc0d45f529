#pragma once

// One-pump fibre optical parametric amplifier with a phase-dithered pump,
// and the loss + FOPA + ASE amplification stage built from it.
//
// Units: gamma in 1/(W km), lengths in km, beta_n in ps^n/km, wavelengths in
// nm. Angular frequencies at the API are rad/s; the gain formula works in
// rad/ps internally.

#include <cstddef>
#include <vector>

#include "fopaeq/rng.hpp"
#include "fopaeq/types.hpp"

namespace fopaeq {

struct FopaParams {
  double gamma = 10.0;
  double pump_power = 0.7142;  // overwritten by calibrate_gain
  double fibre_len = 0.5;
  double beta2 = -0.03;
  double beta3 = 0.1;
  double beta4 = -1e-4;
  double lambda_pump = 1550.0;
  double lambda_signal = 1530.0;

  void validate() const;
  // Signal minus pump angular frequency, rad/s.
  double delta_omega() const;
};

// Signal-minus-pump angular frequency for a signal `detuning_nm` below the
// pump wavelength (positive = shorter signal wavelength).
double detuning_to_omega(double lambda_pump_nm, double detuning_nm);

struct Tone {
  double freq_ghz = 0.0;
  double amp_rad = 0.0;
  double phase_rad = 0.0;
};

struct DitherSpec {
  std::vector<Tone> tones;
  double time_shift = 0.0;  // s

  // 0.1, 0.3, 0.9, 2.7 GHz with the amplitudes and phases given.
  static DitherSpec with_default_freqs(std::vector<double> amps, std::vector<double> phases);
  // Default frequencies (0.1, 0.3, 0.9, 2.7 GHz) at the optimised amplitudes/phases shipped with the tool.
  static DitherSpec default_tones();

  // Common period 1/gcd(f_k); 10 ns for the default set. Zero for no tones.
  double period() const;
  void validate() const;
};

struct StageConfig {
  FopaParams fopa;
  DitherSpec dither;
  double span_loss_db = 0.0;
  double noise_figure_db = 4.5;
  double pump_linewidth_hz = 30e3;
  bool ase = true;

  void validate() const;
};

double pump_phase(double t, const DitherSpec& dither);
// Exact derivative of pump_phase, rad/s.
double pump_freq_offset(double t, const DitherSpec& dither);

// Gain for a pump whose instantaneous frequency is offset by `pump_offset`
// (rad/s) from its carrier.
cdouble complex_gain_instantaneous(const FopaParams& fopa, double delta_omega, double pump_offset);
cdouble complex_gain(const FopaParams& fopa, double delta_omega, double t, const DitherSpec& dither);

// Mean |G|^2 over one dither period (static gain without dither).
double mean_power_gain(const FopaParams& fopa, double delta_omega, const DitherSpec& dither,
                       std::size_t samples = 1024);

// Static peak gain in dB over the calibration band and where it occurs.
struct PeakGain {
  double gain_db = 0.0;
  double detuning_nm = 0.0;
};
PeakGain peak_gain(const FopaParams& fopa, double max_detuning_nm = 40.0);

// Sets pump_power so the static peak gain over 0..40 nm equals the target.
FopaParams calibrate_gain(double target_peak_db, FopaParams partial);

struct GainProfileRow {
  double detuning_nm = 0.0;
  double mean_amp_db = 0.0;   // mean of 20 log10 |G|
  double mean_phase = 0.0;    // arg of the mean gain
  double rms_amp = 0.0;       // std(|G|) / mean(|G|)
  double rms_phase = 0.0;     // rms of arg(G) about mean_phase
};

std::vector<GainProfileRow> gain_profile_scan(const FopaParams& fopa, const DitherSpec& dither,
                                              const std::vector<double>& detuning_nm,
                                              const std::vector<double>& time_grid);

// One dither period sampled at n points.
std::vector<double> period_time_grid(const DitherSpec& dither, std::size_t n = 1024);

// Wiener phase, phi(n) = sum_{k<=n} w_k, w_k ~ N(0, 2 pi dnu Ts).
RealSeq laser_phase_noise(std::size_t n_samples, double linewidth_hz, double sample_period_s, Rng& rng);

// ASE convention: complex field variance E|n|^2 = max(0, NF G - 1) h nu Fs / 2,
// split equally between quadratures, with G the mean FOPA power gain. With
// the quantum floor h nu Fs / 2 at the output this gives total noise
// NF G h nu Fs / 2, i.e. SNR_in / SNR_out = NF for an input at the floor.
double ase_variance(const StageConfig& stage, double sample_rate);

// Loss, FOPA gain sampled at t = t0 + n / Fs, pump phase noise, ASE.
ComplexSeq propagate_stage(const ComplexSeq& signal, double sample_rate, const StageConfig& stage, Rng& rng,
                           double t0 = 0.0);

struct LinkOutput {
  ComplexSeq output;
  std::vector<ComplexSeq> taps;     // output of each stage
  std::vector<double> time_shifts;  // drawn per stage
};

// Each stage draws its own dither time shift, uniform over one period.
LinkOutput propagate_link(const ComplexSeq& signal, double sample_rate, const std::vector<StageConfig>& stages,
                          Rng& rng);

}  // namespace fopaeq
