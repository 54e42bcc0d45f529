#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "fopaeq/errors.hpp"
#include "fopaeq/io.hpp"
#include "fopaeq/txrx_dsp.hpp"
#include "test_util.hpp"

using namespace fopaeq;

namespace {

Bits random_bits(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<int> d(0, 1);
  Bits b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(d(rng));
  return b;
}

ComplexSeq random_symbols(Rng& rng, Eigen::Index n) {
  const Bits b = random_bits(rng, static_cast<std::size_t>(4 * n));
  return map_bits(b);
}

// Shaping, matched filter and decimation of one impulse at symbol `at`.
ComplexSeq combined_response(const ShapingConfig& cfg, Eigen::Index n, Eigen::Index at) {
  ComplexSeq s = ComplexSeq::Zero(n);
  s(at) = 1.0;
  return decimate(rrc_matched_filter(rrc_shape(s, cfg), cfg), cfg.samples_per_symbol);
}

}  // namespace

TEST_CASE("constellation: unit power, corner anchor, Gray neighbours") {
  const auto& q = Constellation::qam16();
  double p = 0.0;
  for (const auto& c : q.points()) p += std::norm(c);
  CHECK(std::abs(p / 16.0 - 1.0) < 1e-12);

  const Bits zeros(4, 0);
  const ComplexSeq s = map_bits(zeros);
  CHECK(std::abs(s(0) - cdouble(-3.0, -3.0) / std::sqrt(10.0)) < 1e-15);

  const double d = 2.0 / std::sqrt(10.0);
  for (int a = 0; a < 16; ++a)
    for (int b = a + 1; b < 16; ++b) {
      const double dist = std::abs(q.point(a) - q.point(b));
      if (std::abs(dist - d) < 1e-12) CHECK(std::popcount(static_cast<unsigned>(a ^ b)) == 1);
    }
}

TEST_CASE("map/demap round trip") {
  Bits all;
  for (int label = 0; label < 16; ++label)
    for (int b = 3; b >= 0; --b) all.push_back(static_cast<std::uint8_t>((label >> b) & 1));
  CHECK(demap_symbols(map_bits(all)) == all);

  Rng rng = make_stream(7, {1});
  const Bits bits = random_bits(rng, 1000000);
  CHECK(demap_symbols(map_bits(bits)) == bits);
}

TEST_CASE("map_bits rejects bad input") {
  const Bits three(3, 0);
  CHECK_THROWS_AS(map_bits(three), ArgumentError);
  const Bits bad{0, 2, 0, 1};
  CHECK_THROWS_AS(map_bits(bad), ArgumentError);
}

TEST_CASE("slicer matches exhaustive search") {
  const auto& q = Constellation::qam16();
  Rng rng = make_stream(7, {2});
  std::uniform_real_distribution<double> u(-1.6, 1.6);
  for (int i = 0; i < 200000; ++i) {
    const cdouble z(u(rng), u(rng));
    REQUIRE(q.slice(z) == q.slice_exhaustive(z));
  }
}

TEST_CASE("rrc: unit peak and Nyquist ISI below -40 dB") {
  const ShapingConfig cfg;
  const Eigen::Index n = 128;
  const ComplexSeq r = combined_response(cfg, n, 64);
  CHECK(std::abs(r(64) - 1.0) < 1e-3);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    if (k != 64) worst = std::max(worst, std::abs(r(k)));
  CHECK(20.0 * std::log10(worst / std::abs(r(64))) < -40.0);

  // Two symbols one period apart: each sees no ISI from the other.
  ComplexSeq s = ComplexSeq::Zero(n);
  s(60) = 1.0;
  s(61) = cdouble(0.0, 1.0);
  const ComplexSeq y = decimate(rrc_matched_filter(rrc_shape(s, cfg), cfg), cfg.samples_per_symbol);
  CHECK(20.0 * std::log10(std::abs(y(60) - 1.0)) < -40.0);
  CHECK(20.0 * std::log10(std::abs(y(61) - cdouble(0.0, 1.0))) < -40.0);
}

TEST_CASE("rrc taps: unit energy, symmetric, odd length") {
  const ShapingConfig cfg;
  const RealSeq h = rrc_taps(cfg);
  CHECK(h.size() == cfg.filter_span_symbols * cfg.samples_per_symbol + 1);
  CHECK(std::abs(h.squaredNorm() - 1.0) < 1e-12);
  for (Eigen::Index i = 0; i < h.size(); ++i) CHECK(h(i) == doctest::Approx(h(h.size() - 1 - i)).epsilon(1e-14));
  ShapingConfig bad;
  bad.rolloff = 0.0;
  CHECK_THROWS_AS(rrc_taps(bad), ArgumentError);
  // Exercise the t = 1/(4 beta) special case.
  ShapingConfig quarter;
  quarter.rolloff = 0.25;
  const RealSeq hq = rrc_taps(quarter);
  CHECK(hq.allFinite());
}

TEST_CASE("rrc: 99% of power within (1 + rolloff) R / 2") {
  const ShapingConfig cfg;
  Rng rng = make_stream(7, {3});
  const Eigen::Index nsym = 1 << 15;
  const ComplexSeq x = rrc_shape(random_symbols(rng, nsym), cfg);
  std::vector<cdouble> in(x.data(), x.data() + x.size()), out;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  const double fs = cfg.sample_rate();
  const double edge = (1.0 + cfg.rolloff) * cfg.symbol_rate / 2.0;
  double total = 0.0, inside = 0.0;
  const auto n = static_cast<double>(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    double f = static_cast<double>(k) / n * fs;
    if (f >= fs / 2.0) f -= fs;
    const double p = std::norm(out[k]);
    total += p;
    if (std::abs(f) <= edge) inside += p;
  }
  CHECK(inside / total > 0.99);
  CHECK(edge == doctest::Approx(15.4e9));
}

TEST_CASE("shape -> matched filter -> decimate: EVM below -40 dB") {
  const ShapingConfig cfg;
  Rng rng = make_stream(7, {4});
  const Eigen::Index n = 4096;
  const ComplexSeq s = random_symbols(rng, n);
  const ComplexSeq r = decimate(rrc_matched_filter(rrc_shape(s, cfg), cfg), cfg.samples_per_symbol);
  const Eigen::Index edge = cfg.filter_span_symbols;
  const ComplexSeq e = r.segment(edge, n - 2 * edge) - s.segment(edge, n - 2 * edge);
  const double evm = e.squaredNorm() / s.segment(edge, n - 2 * edge).squaredNorm();
  CHECK(10.0 * std::log10(evm) < -40.0);
}

TEST_CASE("decimate and normalize_power") {
  ComplexSeq x(6);
  x << 0.0, 1.0, 2.0, 3.0, 4.0, 5.0;
  const ComplexSeq d = decimate(x, 2, 1);
  REQUIRE(d.size() == 3);
  CHECK(d(0) == cdouble(1.0));
  CHECK(d(2) == cdouble(5.0));
  CHECK_THROWS_AS(decimate(x, 2, 2), ArgumentError);
  const ComplexSeq y = normalize_power(x);
  CHECK(y.squaredNorm() / 6.0 == doctest::Approx(1.0));
  const ComplexSeq z = ComplexSeq::Zero(4);
  CHECK(normalize_power(z) == z);
}

TEST_CASE("count_ber examples and symmetry") {
  Rng rng = make_stream(7, {5});
  const Bits a = random_bits(rng, 400);
  CHECK(count_ber(a, a).ber == 0.0);
  Bits one = a;
  one[17] ^= 1u;
  CHECK(count_ber(a, one).ber == doctest::Approx(0.0025));
  CHECK(count_ber(a, one).errors == 1);
  Bits comp = a;
  for (auto& v : comp) v ^= 1u;
  CHECK(count_ber(a, comp).ber == 1.0);
  const Bits b = random_bits(rng, 400);
  CHECK(count_ber(a, b).errors == count_ber(b, a).errors);
  const Bits shorter(399, 0);
  CHECK_THROWS_AS(count_ber(a, shorter), ArgumentError);
}

TEST_CASE("rms_deviation examples") {
  Rng rng = make_stream(7, {6});
  const ComplexSeq tx = random_symbols(rng, 4000);
  auto r0 = rms_deviation(tx, tx);
  CHECK(r0.rms_phase == 0.0);
  CHECK(r0.rms_amp == 0.0);
  CHECK(r0.classes_used == 16);

  auto r1 = rms_deviation(tx, tx * std::polar(1.0, 0.1));
  CHECK(r1.rms_phase == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r1.rms_amp < 1e-12);

  auto r2 = rms_deviation(tx, 1.05 * tx);
  CHECK(r2.rms_phase < 1e-12);
  CHECK(r2.rms_amp == doctest::Approx(0.05).epsilon(1e-12));

  // A constant rotation near pi wraps the same as its 2 pi shifted copy.
  auto a = rms_deviation(tx, tx * std::polar(1.0, 3.0));
  auto b = rms_deviation(tx, tx * std::polar(1.0, 3.0 - 2.0 * kPi));
  CHECK(a.rms_phase == doctest::Approx(b.rms_phase).epsilon(1e-12));
  CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(0.3 + 4.0 * kPi) == doctest::Approx(0.3));

  ComplexSeq few(2);
  few << Constellation::qam16().point(0), Constellation::qam16().point(5);
  auto r3 = rms_deviation(few, few);
  CHECK(r3.classes_used == 2);
  CHECK(r3.empty_classes == 14);
  CHECK_THROWS_AS(rms_deviation(few, tx), ArgumentError);
}

TEST_CASE("sample streams round-trip through binary and CSV") {
  Rng rng = make_stream(7, {7});
  ComplexSeq x(257);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = testing::random_complex(rng, 3.0);
  x(3) = cdouble(1e-300, -0.0);

  std::stringstream bin;
  io::write_complex_binary(bin, x);
  CHECK(bin.str().size() == 16 + 16 * 257);
  CHECK(bin.str().substr(0, 8) == "FOPACSQ1");
  const ComplexSeq xb = io::read_complex_binary(bin);
  CHECK(xb == x);

  std::stringstream csv;
  io::write_complex_csv(csv, x);
  CHECK(csv.str().rfind("# fopaeq.samples/1\nn,re,im\n", 0) == 0);
  const ComplexSeq xc = io::read_complex_csv(csv);
  CHECK(xc == x);

  std::stringstream junk("NOTMAGIC........");
  CHECK_THROWS(io::read_complex_binary(junk));
}
