#include "fopaeq/equalizer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "fopaeq/errors.hpp"
#include "fopaeq/io.hpp"

namespace fopaeq {

void EqualizerConfig::validate() const {
  kernel.validate();
  if (training_len < kernel.block_l + 1)
    throw ArgumentError("equalizer training_len must be >= block_l + 1");
  if (constellation == nullptr) throw ArgumentError("equalizer constellation is null");
}

DistortionHistory::DistortionHistory(std::size_t block_l)
    : values_(ComplexSeq::Constant(static_cast<Eigen::Index>(block_l), cdouble(1.0, 0.0))) {}

void DistortionHistory::push(cdouble d) {
  const Eigen::Index l = values_.size();
  for (Eigen::Index i = l - 1; i > 0; --i) values_(i) = values_(i - 1);
  if (l > 0) values_(0) = d;
  ++pushed_;
}

RealSeq DistortionHistory::composite() const { return complexify(values_); }

EqualizerOutput step_in_place(SwkrlsState<double>& state, DistortionHistory& history, cdouble r,
                              std::optional<cdouble> reference, const EqualizerConfig& cfg) {
  if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) throw ArgumentError("equalizer: non-finite sample");
  const auto& params = cfg.kernel;
  const RealSeq x = history.composite();

  EqualizerOutput out;
  out.mode = reference ? EqMode::training : EqMode::decision_directed;

  cdouble d_hat(1.0, 0.0);
  if (history.pushed() > params.block_l && !state.empty()) {
    d_hat = state.predict(x, params.sigma);
    if (!(std::abs(d_hat) >= kDivisionGuard)) {
      d_hat = history.last_prediction;
      out.clamped = true;
    } else {
      history.last_prediction = d_hat;
    }
  }
  out.predicted_distortion = d_hat;
  out.corrected = r / d_hat;
  out.decided = reference ? *reference : cfg.constellation->decide(out.corrected);
  out.decision_distortion = r / out.decided;

  try {
    state.update_in_place(x, out.decision_distortion, params);
  } catch (const NumericalError&) {
    out.update_skipped = true;
  }
  history.push(out.decision_distortion);
  return out;
}

EqualizerStep step(SwkrlsState<double> state, DistortionHistory history, cdouble r,
                   std::optional<cdouble> reference, const EqualizerConfig& cfg) {
  EqualizerOutput out = step_in_place(state, history, r, reference, cfg);
  return {std::move(state), std::move(history), out};
}

void EqualizerTrace::resize(Eigen::Index n) {
  received.resize(n);
  predicted.resize(n);
  decision_distortion.resize(n);
  corrected.resize(n);
  decided.resize(n);
  mode.assign(static_cast<std::size_t>(n), EqMode::training);
  skipped_updates = 0;
  clamped = 0;
}

void EqualizerTrace::record(Eigen::Index k, cdouble r, const EqualizerOutput& out) {
  received(k) = r;
  predicted(k) = out.predicted_distortion;
  decision_distortion(k) = out.decision_distortion;
  corrected(k) = out.corrected;
  decided(k) = out.decided;
  mode[static_cast<std::size_t>(k)] = out.mode;
  skipped_updates += out.update_skipped ? 1 : 0;
  clamped += out.clamped ? 1 : 0;
}

BlockResult run_block(const ComplexSeq& symbols_rx, const ComplexSeq& reference, const EqualizerConfig& cfg) {
  cfg.validate();
  const auto training = static_cast<Eigen::Index>(cfg.training_len);
  if (reference.size() < std::min(training, symbols_rx.size()))
    throw ArgumentError("run_block: reference shorter than training_len");

  SwkrlsState<double> state(cfg.kernel);
  DistortionHistory history(cfg.kernel.block_l);
  BlockResult res;
  res.trace.resize(symbols_rx.size());
  for (Eigen::Index k = 0; k < symbols_rx.size(); ++k) {
    const std::optional<cdouble> ref = k < training ? std::optional<cdouble>(reference(k)) : std::nullopt;
    const EqualizerOutput out = step_in_place(state, history, symbols_rx(k), ref, cfg);
    res.trace.record(k, symbols_rx(k), out);
  }
  res.corrected = res.trace.corrected;
  return res;
}

void write_trace_csv(std::ostream& os, const EqualizerTrace& trace) {
  io::CsvWriter w(os, "fopaeq.trace/1",
                  {"n", "r_re", "r_im", "dhat_re", "dhat_im", "dtilde_re", "dtilde_im", "z_re", "z_im", "dec_re",
                   "dec_im", "mode"});
  for (Eigen::Index k = 0; k < trace.size(); ++k) {
    w << static_cast<long long>(k) << trace.received(k).real() << trace.received(k).imag()
      << trace.predicted(k).real() << trace.predicted(k).imag() << trace.decision_distortion(k).real()
      << trace.decision_distortion(k).imag() << trace.corrected(k).real() << trace.corrected(k).imag()
      << trace.decided(k).real() << trace.decided(k).imag()
      << (trace.mode[static_cast<std::size_t>(k)] == EqMode::training ? "training" : "decision_directed");
    w.end_row();
  }
}

}  // namespace fopaeq
