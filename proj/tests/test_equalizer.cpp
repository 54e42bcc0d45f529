#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "fopaeq/equalizer.hpp"
#include "fopaeq/errors.hpp"
#include "test_util.hpp"

using namespace fopaeq;

namespace {

ComplexSeq random_qam(Rng& rng, Eigen::Index n) {
  std::uniform_int_distribution<int> d(0, 15);
  ComplexSeq s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = Constellation::qam16().point(d(rng));
  return s;
}

EqualizerConfig small_config(std::size_t m = 20, std::size_t l = 4, std::size_t training = 200) {
  EqualizerConfig c;
  c.kernel.window_m = m;
  c.kernel.block_l = l;
  c.training_len = training;
  return c;
}

bool on_constellation(cdouble z) {
  for (const auto& p : Constellation::qam16().points())
    if (p == z) return true;
  return false;
}

// Lag vector of symbol n rebuilt from the trace (ones before the start).
Eigen::VectorXd lag_vector(const EqualizerTrace& t, Eigen::Index n, std::size_t l) {
  ComplexSeq h(static_cast<Eigen::Index>(l));
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    const Eigen::Index k = n - 1 - j;
    h(j) = k >= 0 ? t.decision_distortion(k) : cdouble(1.0, 0.0);
  }
  Eigen::VectorXd x(2 * h.size());
  x << h.real(), h.imag();
  return x;
}

}  // namespace

TEST_CASE("config validation") {
  EqualizerConfig c = small_config(10, 4, 4);
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c.training_len = 5;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("history is newest first and starts at one") {
  DistortionHistory h(3);
  CHECK(h.values() == ComplexSeq::Constant(3, cdouble(1.0, 0.0)));
  h.push({2.0, 0.0});
  h.push({3.0, 1.0});
  CHECK(h.values()(0) == cdouble(3.0, 1.0));
  CHECK(h.values()(1) == cdouble(2.0, 0.0));
  CHECK(h.values()(2) == cdouble(1.0, 0.0));
  CHECK(h.pushed() == 2);
  const RealSeq x = h.composite();
  CHECK(x.size() == 6);
  CHECK(x(0) == 3.0);
  CHECK(x(3) == 1.0);
}

TEST_CASE("identity channel in training: d~ = 1 and z -> s") {
  Rng rng = make_stream(11, {1});
  const ComplexSeq s = random_qam(rng, 400);
  const auto cfg = small_config();
  const auto res = run_block(s, s, cfg);
  // Identical dictionary points: 1^T (11^T + lambda I)^{-1} 1 = M / (M + lambda).
  const double m = static_cast<double>(cfg.kernel.window_m);
  const double shrink = m / (m + cfg.kernel.lambda);
  for (Eigen::Index n = 0; n < s.size(); ++n) {
    CHECK(res.trace.decision_distortion(n) == cdouble(1.0, 0.0));
    if (n > static_cast<Eigen::Index>(cfg.kernel.window_m + cfg.kernel.block_l + 1)) {
      CHECK(std::abs(res.trace.predicted(n) - shrink) < 1e-12);
      CHECK(std::abs(res.corrected(n) - s(n) / shrink) < 1e-12);
    }
  }
}

TEST_CASE("functional step equals in-place step and leaves arguments alone") {
  const auto cfg = small_config(5, 2, 10);
  SwkrlsState<double> st(cfg.kernel);
  DistortionHistory h(2);
  const cdouble s = Constellation::qam16().point(3);
  auto a = step(st, h, 0.9 * s, s, cfg);
  CHECK(st.empty());
  CHECK(h.pushed() == 0);
  auto out = step_in_place(st, h, 0.9 * s, s, cfg);
  CHECK(out.decision_distortion == a.output.decision_distortion);
  CHECK(st.size() == a.state.size());
  CHECK(h.values() == a.history.values());
  CHECK(a.output.mode == EqMode::training);
  CHECK(std::abs(a.output.decision_distortion - 0.9) < 1e-15);
}

TEST_CASE("warm-up: first L + 1 predictions are exactly one") {
  Rng rng = make_stream(11, {2});
  const ComplexSeq s = random_qam(rng, 50);
  const cdouble c = std::polar(0.8, 0.4);
  const auto cfg = small_config(20, 6, 30);
  const auto res = run_block(c * s, s, cfg);
  for (Eigen::Index n = 0; n <= 6; ++n) CHECK(res.trace.predicted(n) == cdouble(1.0, 0.0));
  CHECK(res.trace.predicted(7) != cdouble(1.0, 0.0));
}

TEST_CASE("static channel: d_hat -> c M / (M + lambda) and decisions exact") {
  Rng rng = make_stream(11, {3});
  const ComplexSeq s = random_qam(rng, 3000);
  for (cdouble c : {std::polar(1.0, 0.0), std::polar(0.7, 1.1), std::polar(1.3, -2.5)}) {
    const auto cfg = small_config(30, 5, 300);
    const auto res = run_block(c * s, s, cfg);
    const double shrink = 30.0 / (30.0 + cfg.kernel.lambda);
    for (Eigen::Index n = 300; n < s.size(); ++n) {
      REQUIRE(res.trace.decided(n) == s(n));
      CHECK(std::abs(res.trace.predicted(n) - c * shrink) < 1e-6);
    }
    CHECK(res.trace.skipped_updates == 0);
  }
}

TEST_CASE("rotating channel: tracks and matches a per-step batch solve") {
  Rng rng = make_stream(11, {4});
  const Eigen::Index n = 1500;
  const ComplexSeq s = random_qam(rng, n);
  ComplexSeq r(n), c(n);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (Eigen::Index k = 0; k < n; ++k) {
    c(k) = std::polar(1.0, 2e-3 * static_cast<double>(k));
    r(k) = c(k) * s(k) + cdouble(noise(rng), noise(rng));
  }
  const auto cfg = small_config(25, 4, 200);
  const auto res = run_block(r, s, cfg);
  const auto& t = res.trace;
  const std::size_t m = cfg.kernel.window_m;
  const std::size_t l = cfg.kernel.block_l;

  double worst_oracle = 0.0, worst_track = 0.0;
  for (Eigen::Index k = 300; k < n; ++k) {
    // Window holds pairs k-M .. k-1.
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(2 * l));
    ComplexSeq y(static_cast<Eigen::Index>(m));
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(m); ++j) {
      const Eigen::Index idx = k - static_cast<Eigen::Index>(m) + j;
      rows.row(j) = lag_vector(t, idx, l).transpose();
      y(j) = t.decision_distortion(idx);
    }
    const Eigen::MatrixXd kr = testing::dense_regularized_kernel(rows, cfg.kernel.sigma, cfg.kernel.lambda);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kr);
    const Eigen::VectorXd yr = y.real(), yi = y.imag();
    const Eigen::VectorXd ar = lu.solve(yr), ai = lu.solve(yi);
    const Eigen::VectorXd q = lag_vector(t, k, l);
    cdouble pred(0.0, 0.0);
    for (Eigen::Index j = 0; j < rows.rows(); ++j) {
      const double kv = std::exp(-(rows.row(j).transpose() - q).squaredNorm() / (2.0 * cfg.kernel.sigma * cfg.kernel.sigma));
      pred += kv * cdouble(ar(j), ai(j));
    }
    worst_oracle = std::max(worst_oracle, std::abs(pred - t.predicted(k)));
    worst_track = std::max(worst_track, std::abs(t.predicted(k) - c(k)));
    REQUIRE(t.decided(k) == s(k));
  }
  CHECK(worst_oracle < 1e-6);
  CHECK(worst_track < 0.05);
}

TEST_CASE("training d~ is r / reference exactly; decisions lie on the alphabet") {
  Rng rng = make_stream(11, {5});
  const Eigen::Index n = 800;
  const ComplexSeq s = random_qam(rng, n);
  ComplexSeq r(n);
  std::normal_distribution<double> noise(0.0, 0.15);
  for (Eigen::Index k = 0; k < n; ++k) r(k) = std::polar(1.0, 0.3) * s(k) + cdouble(noise(rng), noise(rng));
  const auto cfg = small_config(20, 4, 100);
  const auto res = run_block(r, s, cfg);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k < 100) {
      CHECK(res.trace.mode[static_cast<std::size_t>(k)] == EqMode::training);
      CHECK(res.trace.decision_distortion(k) == r(k) / s(k));
    } else {
      CHECK(res.trace.mode[static_cast<std::size_t>(k)] == EqMode::decision_directed);
      CHECK(on_constellation(res.trace.decided(k)));
      CHECK(res.trace.decision_distortion(k) == r(k) / res.trace.decided(k));
    }
  }
}

TEST_CASE("common phase on the received stream is absorbed by training") {
  Rng rng = make_stream(11, {6});
  const Eigen::Index n = 2000;
  const ComplexSeq s = random_qam(rng, n);
  ComplexSeq r(n);
  for (Eigen::Index k = 0; k < n; ++k) r(k) = std::polar(1.0, 0.05 * std::sin(1e-2 * k)) * s(k);
  const auto cfg = small_config(30, 4, 300);
  const auto a = run_block(r, s, cfg);
  const auto b = run_block(std::polar(1.0, 2.2) * r, s, cfg);
  for (Eigen::Index k = 300; k < n; ++k) {
    REQUIRE(a.trace.decided(k) == s(k));
    REQUIRE(b.trace.decided(k) == s(k));
  }
}

TEST_CASE("run_block boundaries and errors") {
  Rng rng = make_stream(11, {7});
  const ComplexSeq s = random_qam(rng, 64);
  auto cfg = small_config(10, 4, 64);
  const auto res = run_block(s, s, cfg);
  for (auto m : res.trace.mode) CHECK(m == EqMode::training);

  cfg.training_len = 32;
  const ComplexSeq shortref = s.head(10);
  CHECK_THROWS_AS(run_block(s, shortref, cfg), ArgumentError);

  ComplexSeq bad = s;
  bad(5) = cdouble(std::nan(""), 0.0);
  CHECK_THROWS_AS(run_block(bad, s, cfg), ArgumentError);
}

TEST_CASE("division guard keeps the last valid prediction") {
  const auto cfg = small_config(8, 2, 3);
  SwkrlsState<double> st(cfg.kernel);
  DistortionHistory h(2);
  const cdouble s = Constellation::qam16().point(6);
  for (int i = 0; i < 6; ++i) step_in_place(st, h, s, s, cfg);
  const cdouble before = h.last_prediction;
  // Tiny received samples drive d~ and hence d_hat towards 0.
  bool clamped = false;
  for (int i = 0; i < 40 && !clamped; ++i) {
    const auto out = step_in_place(st, h, 1e-14 * s, s, cfg);
    if (out.clamped) {
      clamped = true;
      CHECK(std::abs(out.predicted_distortion) >= kDivisionGuard);
      CHECK(std::isfinite(out.corrected.real()));
    }
  }
  CHECK(clamped);
  CHECK(std::abs(before) > 0.5);
}

TEST_CASE("deterministic traces and CSV export") {
  Rng rng = make_stream(11, {8});
  const ComplexSeq s = random_qam(rng, 300);
  ComplexSeq r = std::polar(0.9, 0.2) * s;
  const auto cfg = small_config(10, 3, 50);
  const auto a = run_block(r, s, cfg);
  const auto b = run_block(r, s, cfg);
  std::ostringstream oa, ob;
  write_trace_csv(oa, a.trace);
  write_trace_csv(ob, b.trace);
  CHECK(oa.str() == ob.str());
  const std::string head = "# fopaeq.trace/1\nn,r_re,r_im,dhat_re,dhat_im,dtilde_re,dtilde_im,z_re,z_im,dec_re,dec_im,mode\n";
  CHECK(oa.str().rfind(head, 0) == 0);
  std::size_t lines = 0;
  for (char ch : oa.str()) lines += ch == '\n';
  CHECK(lines == 302);
}
