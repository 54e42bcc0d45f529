#include "fopaeq/txrx_dsp.hpp"

#include <algorithm>
#include <cmath>

#include "fopaeq/errors.hpp"

namespace fopaeq {

namespace {

// Gray level index (0..3 -> -3, -1, 1, 3) for a 2-bit axis label.
constexpr std::array<int, 4> kAxisLevel = {-3, -1, 3, 1};  // 00, 01, 10, 11

int axis_bits(int level_index) {
  // level_index 0..3 for -3, -1, 1, 3
  constexpr std::array<int, 4> bits = {0b00, 0b01, 0b11, 0b10};
  return bits[static_cast<std::size_t>(level_index)];
}

int axis_level_index(double v, double scale) {
  const double u = v / scale;
  if (u < -2.0) return 0;
  if (u < 0.0) return 1;
  if (u < 2.0) return 2;
  return 3;
}

ComplexSeq filter_same(const ComplexSeq& x, const RealSeq& h) {
  const Eigen::Index n = x.size();
  const Eigen::Index taps = h.size();
  const Eigen::Index half = taps / 2;
  ComplexSeq y = ComplexSeq::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, k + half - (n - 1));
    const Eigen::Index hi = std::min<Eigen::Index>(taps - 1, k + half);
    cdouble acc = 0.0;
    for (Eigen::Index t = lo; t <= hi; ++t) acc += h(t) * x(k + half - t);
    y(k) = acc;
  }
  return y;
}

}  // namespace

Constellation::Constellation() : scale_(1.0 / std::sqrt(10.0)) {
  for (int label = 0; label < kSize; ++label) {
    const int i_bits = (label >> 2) & 0b11;
    const int q_bits = label & 0b11;
    points_[static_cast<std::size_t>(label)] =
        cdouble(kAxisLevel[static_cast<std::size_t>(i_bits)], kAxisLevel[static_cast<std::size_t>(q_bits)]) * scale_;
  }
}

const Constellation& Constellation::qam16() {
  static const Constellation c;
  return c;
}

int Constellation::slice(cdouble z) const {
  const int i_bits = axis_bits(axis_level_index(z.real(), scale_));
  const int q_bits = axis_bits(axis_level_index(z.imag(), scale_));
  return (i_bits << 2) | q_bits;
}

int Constellation::slice_exhaustive(cdouble z) const {
  int best = 0;
  double best_d = std::norm(z - points_[0]);
  for (int k = 1; k < kSize; ++k) {
    const double d = std::norm(z - points_[static_cast<std::size_t>(k)]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

ComplexSeq map_bits(std::span<const std::uint8_t> bits) {
  if (bits.size() % Constellation::kBitsPerSymbol != 0)
    throw ArgumentError("map_bits: bit count must be a multiple of 4");
  const auto& qam = Constellation::qam16();
  const auto n = static_cast<Eigen::Index>(bits.size() / Constellation::kBitsPerSymbol);
  ComplexSeq out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    int label = 0;
    for (int b = 0; b < Constellation::kBitsPerSymbol; ++b) {
      const auto bit = bits[static_cast<std::size_t>(k * 4 + b)];
      if (bit > 1) throw ArgumentError("map_bits: bits must be 0 or 1");
      label = (label << 1) | bit;
    }
    out(k) = qam.point(label);
  }
  return out;
}

std::vector<int> labels_of(const ComplexSeq& decisions) {
  const auto& qam = Constellation::qam16();
  std::vector<int> labels(static_cast<std::size_t>(decisions.size()));
  for (Eigen::Index k = 0; k < decisions.size(); ++k) labels[static_cast<std::size_t>(k)] = qam.slice(decisions(k));
  return labels;
}

Bits demap_symbols(const ComplexSeq& decisions) {
  Bits bits;
  bits.reserve(static_cast<std::size_t>(decisions.size()) * 4);
  for (int label : labels_of(decisions))
    for (int b = Constellation::kBitsPerSymbol - 1; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((label >> b) & 1));
  return bits;
}

void ShapingConfig::validate() const {
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ArgumentError("shaping rolloff must be in (0, 1]");
  if (!(symbol_rate > 0.0)) throw ArgumentError("shaping symbol_rate must be > 0");
  if (samples_per_symbol < 1) throw ArgumentError("shaping samples_per_symbol must be >= 1");
  if (filter_span_symbols < 2 || filter_span_symbols % 2 != 0)
    throw ArgumentError("shaping filter_span_symbols must be an even integer >= 2");
}

RealSeq rrc_taps(const ShapingConfig& cfg) {
  cfg.validate();
  const int sps = cfg.samples_per_symbol;
  const int half = cfg.filter_span_symbols * sps / 2;
  const double beta = cfg.rolloff;
  RealSeq h(2 * half + 1);
  for (int k = -half; k <= half; ++k) {
    const double t = static_cast<double>(k) / sps;  // in symbol periods
    double v;
    if (k == 0) {
      v = 1.0 - beta + 4.0 * beta / kPi;
    } else if (std::abs(std::abs(4.0 * beta * t) - 1.0) < 1e-12) {
      v = beta / std::sqrt(2.0) *
          ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
    } else {
      v = (std::sin(kPi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(kPi * t * (1.0 + beta))) /
          (kPi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t)));
    }
    h(k + half) = v;
  }
  h /= h.norm();
  return h;
}

ComplexSeq rrc_shape(const ComplexSeq& symbols, const ShapingConfig& cfg) {
  const int sps = cfg.samples_per_symbol;
  ComplexSeq up = ComplexSeq::Zero(symbols.size() * sps);
  for (Eigen::Index k = 0; k < symbols.size(); ++k) up(k * sps) = symbols(k);
  return filter_same(up, rrc_taps(cfg));
}

ComplexSeq rrc_matched_filter(const ComplexSeq& samples, const ShapingConfig& cfg) {
  return filter_same(samples, rrc_taps(cfg));
}

ComplexSeq decimate(const ComplexSeq& samples, int factor, int offset) {
  if (factor < 1 || offset < 0 || offset >= factor) throw ArgumentError("decimate: invalid factor/offset");
  const Eigen::Index n = (samples.size() - offset + factor - 1) / factor;
  ComplexSeq out(std::max<Eigen::Index>(n, 0));
  for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = samples(offset + k * factor);
  return out;
}

ComplexSeq normalize_power(const ComplexSeq& x) {
  if (x.size() == 0) return x;
  const double p = x.squaredNorm() / static_cast<double>(x.size());
  if (!(p > 0.0)) return x;
  return x / std::sqrt(p);
}

BerCount count_ber(std::span<const std::uint8_t> tx_bits, std::span<const std::uint8_t> rx_bits) {
  if (tx_bits.size() != rx_bits.size()) throw ArgumentError("count_ber: length mismatch");
  BerCount c;
  c.total = tx_bits.size();
  for (std::size_t i = 0; i < tx_bits.size(); ++i) c.errors += (tx_bits[i] != rx_bits[i]) ? 1 : 0;
  c.ber = c.total ? static_cast<double>(c.errors) / static_cast<double>(c.total) : 0.0;
  return c;
}

double wrap_phase(double x) {
  double y = std::remainder(x, 2.0 * kPi);  // [-pi, pi]
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

RmsDeviation rms_deviation(const ComplexSeq& tx_symbols, const ComplexSeq& rx_symbols) {
  if (tx_symbols.size() != rx_symbols.size()) throw ArgumentError("rms_deviation: length mismatch");
  const auto& qam = Constellation::qam16();
  std::array<double, Constellation::kSize> sum_phase{}, sum_amp{};
  std::array<std::size_t, Constellation::kSize> count{};
  for (Eigen::Index k = 0; k < tx_symbols.size(); ++k) {
    const cdouble tx = tx_symbols(k);
    const cdouble rx = rx_symbols(k);
    const auto cls = static_cast<std::size_t>(qam.slice_exhaustive(tx));
    const double dphi = wrap_phase(std::arg(rx) - std::arg(tx));
    const double damp = (std::abs(rx) - std::abs(tx)) / std::abs(tx);
    sum_phase[cls] += dphi * dphi;
    sum_amp[cls] += damp * damp;
    ++count[cls];
  }
  RmsDeviation out;
  for (std::size_t c = 0; c < count.size(); ++c) {
    if (count[c] == 0) {
      ++out.empty_classes;
      continue;
    }
    out.rms_phase += std::sqrt(sum_phase[c] / static_cast<double>(count[c]));
    out.rms_amp += std::sqrt(sum_amp[c] / static_cast<double>(count[c]));
    ++out.classes_used;
  }
  if (out.classes_used > 0) {
    out.rms_phase /= out.classes_used;
    out.rms_amp /= out.classes_used;
  }
  return out;
}

}  // namespace fopaeq
