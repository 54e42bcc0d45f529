#pragma once

// Dither tone optimisation: flatten the comb of exp(i phi_p(t)).
//
// With all tone frequencies on a common base f0, exp(i phi_p) is periodic
// and its spectrum is a comb at multiples of f0. The retained lines are
// |k| <= sum_k f_k / f0 (81 lines for the 0.1/0.3/0.9/2.7 GHz set).

#include <cstdint>
#include <vector>

#include "fopaeq/fopa_channel.hpp"

namespace fopaeq {

struct ToneOptimizerConfig {
  int fft_size = 1024;
  int restarts = 12;
  int max_sweeps = 400;
  double initial_step = 0.25;
  double min_step = 1e-7;
  std::uint64_t seed = 1;
};

struct CombSpectrum {
  std::vector<int> index;       // line number k, frequency k f0
  std::vector<double> power;    // |c_k|^2, sums to 1 over all lines
  double base_freq_hz = 0.0;
};

// All fft_size lines, ordered by k from -fft_size/2.
CombSpectrum comb_spectrum(const DitherSpec& dither, int fft_size = 1024);
int retained_half_width(const DitherSpec& dither);
// Powers of the retained lines, k = -K..K.
std::vector<double> retained_line_powers(const DitherSpec& dither, int fft_size = 1024);

// Variance of the retained line powers after normalising them to unit mean.
// Normalising keeps the optimiser from lowering the variance by pushing
// power out of the retained band.
double line_power_objective(const std::vector<double>& powers);
double raw_line_power_variance(const std::vector<double>& powers);
// 10 log10(max / min) over the retained lines.
double line_ripple_db(const std::vector<double>& powers);

struct ToneOptimizerResult {
  DitherSpec spec;
  double objective_start = 0.0;
  double objective_best = 0.0;
  double reduction_db = 0.0;  // 10 log10(start / best)
  double ripple_db = 0.0;
  long evaluations = 0;
  bool converged = false;  // false: budget ran out, best-so-far returned
};

// Pump linewidth and resolution are accepted for interface symmetry; they
// scale every comb line alike and do not move the optimum.
ToneOptimizerResult optimize_tones(const DitherSpec& base, double pump_linewidth_hz, double spectral_resolution_hz,
                                   const ToneOptimizerConfig& cfg = {});

}  // namespace fopaeq
