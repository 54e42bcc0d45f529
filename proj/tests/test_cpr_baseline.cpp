#include <doctest.h>

#include <cmath>
#include <random>

#include "fopaeq/cpr_baseline.hpp"
#include "fopaeq/errors.hpp"
#include "fopaeq/fopa_channel.hpp"

using namespace fopaeq;

namespace {

ComplexSeq random_qam(Rng& rng, Eigen::Index n) {
  std::uniform_int_distribution<int> d(0, 15);
  ComplexSeq s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = Constellation::qam16().point(d(rng));
  return s;
}

std::size_t symbol_errors(const ComplexSeq& a, const ComplexSeq& b, Eigen::Index from) {
  std::size_t e = 0;
  for (Eigen::Index i = from; i < a.size(); ++i) e += a(i) != b(i);
  return e;
}

}  // namespace

TEST_CASE("lms_step fixed point and mu = 0") {
  LmsConfig cfg;
  const cdouble s = Constellation::qam16().point(9);
  const auto a = lms_step({1.0, 0.0}, s, s, cfg);
  CHECK(a.w == cdouble(1.0, 0.0));
  CHECK(a.corrected == s);
  CHECK(a.decided == s);

  LmsConfig frozen;
  frozen.mu = 0.0;
  cdouble w(0.7, 0.2);
  Rng rng = make_stream(5, {1});
  const ComplexSeq x = random_qam(rng, 500);
  for (Eigen::Index i = 0; i < x.size(); ++i) w = lms_step(w, x(i) * cdouble(0.3, 0.9), std::nullopt, frozen).w;
  CHECK(w == cdouble(0.7, 0.2));
}

TEST_CASE("lms config validation") {
  LmsConfig c;
  c.mu = 0.0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c.mu = 1.0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c.mu = 0.5;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("static rotation: w -> exp(-i theta)") {
  Rng rng = make_stream(5, {2});
  const ComplexSeq s = random_qam(rng, 3000);
  for (double theta : {0.3, -0.6, 1.2}) {
    const ComplexSeq r = std::polar(1.0, theta) * s;
    LmsConfig cfg;
    cfg.training_len = 3000;
    cdouble w(1.0, 0.0);
    for (Eigen::Index i = 0; i < s.size(); ++i) w = lms_step(w, r(i), s(i), cfg).w;
    CHECK(std::abs(w * std::polar(1.0, theta) - 1.0) < 1e-3);
  }
}

TEST_CASE("noiseless identity channel: zero errors") {
  Rng rng = make_stream(5, {3});
  const ComplexSeq s = random_qam(rng, 5000);
  LmsConfig cfg;
  const auto res = run_block_lms(s, s, cfg);
  CHECK(symbol_errors(res.trace.decided, s, 0) == 0);
  CHECK(res.trace.predicted(0) == cdouble(1.0, 0.0));
}

TEST_CASE("mean squared error decreases on a static channel (ensemble)") {
  double early = 0.0, late = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng = make_stream(5, {4, static_cast<std::uint64_t>(trial)});
    const ComplexSeq s = random_qam(rng, 2000);
    std::normal_distribution<double> n(0.0, 0.05);
    LmsConfig cfg;
    cdouble w(1.0, 0.0);
    const cdouble c = std::polar(0.8, 0.5);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const cdouble r = c * s(i) + cdouble(n(rng), n(rng));
      const auto st = lms_step(w, r, s(i), cfg);
      (i < 1000 ? early : late) += std::norm(s(i) - st.corrected);
      w = st.w;
    }
  }
  CHECK(late < early);
}

TEST_CASE("laser phase noise only: BER near the known-phase floor") {
  const Eigen::Index n = 200000;
  Rng rng = make_stream(5, {5});
  const ComplexSeq s = random_qam(rng, n);
  const RealSeq phi_tx = laser_phase_noise(static_cast<std::size_t>(n), 50e3, 1.0 / 28e9, rng);
  const RealSeq phi_rx = laser_phase_noise(static_cast<std::size_t>(n), 50e3, 1.0 / 28e9, rng);
  const double snr_db = 17.0;
  std::normal_distribution<double> noise(0.0, std::sqrt(std::pow(10.0, -snr_db / 10.0) / 2.0));
  ComplexSeq r(n), ideal(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cdouble w(noise(rng), noise(rng));
    const double ph = phi_tx(i) - phi_rx(i);
    r(i) = std::polar(1.0, ph) * s(i) + w;
    ideal(i) = Constellation::qam16().decide(r(i) * std::polar(1.0, -ph));
  }
  LmsConfig cfg;
  const auto res = run_block_lms(r, s, cfg);
  const auto e_lms = static_cast<double>(symbol_errors(res.trace.decided, s, 2000));
  const auto e_ideal = static_cast<double>(symbol_errors(ideal, s, 2000));
  MESSAGE("symbol errors LMS " << e_lms << " ideal " << e_ideal);
  CHECK(e_ideal > 100.0);
  CHECK(e_lms < 2.0 * e_ideal);  // tracking lag, not a cycle slip
}

TEST_CASE("trace shape mirrors the kernel equalizer") {
  Rng rng = make_stream(5, {6});
  const ComplexSeq s = random_qam(rng, 300);
  const ComplexSeq r = std::polar(1.1, 0.2) * s;
  LmsConfig cfg;
  cfg.training_len = 100;
  const auto res = run_block_lms(r, s, cfg);
  CHECK(res.trace.size() == 300);
  CHECK(res.trace.mode[99] == EqMode::training);
  CHECK(res.trace.mode[100] == EqMode::decision_directed);
  for (Eigen::Index k = 1; k < 300; ++k)
    CHECK(std::abs(res.trace.corrected(k) - r(k) / res.trace.predicted(k)) < 1e-12);
  const ComplexSeq shortref = s.head(50);
  CHECK_THROWS_AS(run_block_lms(r, shortref, cfg), ArgumentError);
  const auto again = run_block_lms(r, s, cfg);
  CHECK(again.corrected == res.corrected);
}
