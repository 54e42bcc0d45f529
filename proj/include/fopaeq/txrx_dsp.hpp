#pragma once

// 16-QAM mapping, root-raised-cosine pulse shaping and receiver metrics.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fopaeq/types.hpp"

namespace fopaeq {

using Bits = std::vector<std::uint8_t>;

// Square Gray-mapped 16-QAM at unit average power. Label bits b0..b3 (MSB
// first) select the in-phase level from (b0, b1) and quadrature from
// (b2, b3) with the per-axis Gray code 00 -> -3, 01 -> -1, 11 -> +1,
// 10 -> +3 (before the 1/sqrt(10) scale). Label 0 is the -3-3j corner.
class Constellation {
 public:
  static constexpr int kBitsPerSymbol = 4;
  static constexpr int kSize = 16;

  static const Constellation& qam16();

  const std::array<cdouble, kSize>& points() const { return points_; }
  cdouble point(int label) const { return points_[static_cast<std::size_t>(label)]; }

  // Minimum-Euclidean-distance decision (per-axis slicing on the square
  // grid, identical to the exhaustive search).
  int slice(cdouble z) const;
  cdouble decide(cdouble z) const { return point(slice(z)); }

  // Exhaustive nearest-point search, kept as the reference for slice().
  int slice_exhaustive(cdouble z) const;

 private:
  Constellation();
  std::array<cdouble, kSize> points_{};
  double scale_ = 0.0;
};

ComplexSeq map_bits(std::span<const std::uint8_t> bits);
Bits demap_symbols(const ComplexSeq& decisions);
std::vector<int> labels_of(const ComplexSeq& decisions);

struct ShapingConfig {
  double rolloff = 0.1;
  double symbol_rate = 28e9;
  int samples_per_symbol = 2;
  int filter_span_symbols = 32;

  void validate() const;
  double sample_rate() const { return symbol_rate * samples_per_symbol; }
};

// Unit-energy RRC taps, odd length span * sps + 1, centred.
RealSeq rrc_taps(const ShapingConfig& cfg);

// Upsample by sps and filter. Output has symbols.size() * sps samples with
// the filter delay removed, so symbol k sits at sample k * sps.
ComplexSeq rrc_shape(const ComplexSeq& symbols, const ShapingConfig& cfg);

// Matched filter, same alignment convention as rrc_shape.
ComplexSeq rrc_matched_filter(const ComplexSeq& samples, const ShapingConfig& cfg);

ComplexSeq decimate(const ComplexSeq& samples, int factor, int offset = 0);

// Scales to unit mean |x|^2. Zero input is returned unchanged.
ComplexSeq normalize_power(const ComplexSeq& x);

struct BerCount {
  std::size_t errors = 0;
  std::size_t total = 0;
  double ber = 0.0;
};

BerCount count_ber(std::span<const std::uint8_t> tx_bits, std::span<const std::uint8_t> rx_bits);

struct RmsDeviation {
  double rms_phase = 0.0;  // rad
  double rms_amp = 0.0;    // relative to |tx|
  int classes_used = 0;
  int empty_classes = 0;
};

// Per constellation class: RMS of the wrapped phase error and of the
// relative amplitude error (|rx| - |tx|) / |tx|; the result is the mean over
// occupied classes.
RmsDeviation rms_deviation(const ComplexSeq& tx_symbols, const ComplexSeq& rx_symbols);

// Wraps to (-pi, pi].
double wrap_phase(double x);

}  // namespace fopaeq
