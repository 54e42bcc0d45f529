#include "fopaeq/cpr_baseline.hpp"

#include <algorithm>
#include <cmath>

#include "fopaeq/errors.hpp"

namespace fopaeq {

void LmsConfig::validate() const {
  if (!(mu > 0.0 && mu < 1.0)) throw ArgumentError("lms mu must be in (0, 1)");
  if (constellation == nullptr) throw ArgumentError("lms constellation is null");
}

LmsStep lms_step(cdouble w, cdouble r, std::optional<cdouble> reference, const LmsConfig& cfg) {
  LmsStep s;
  s.corrected = w * r;
  s.decided = reference ? *reference : cfg.constellation->decide(s.corrected);
  const cdouble e = s.decided - s.corrected;
  s.w = w + cfg.mu * e * std::conj(r);
  return s;
}

BlockResult run_block_lms(const ComplexSeq& symbols_rx, const ComplexSeq& reference, const LmsConfig& cfg) {
  cfg.validate();
  const auto training = static_cast<Eigen::Index>(cfg.training_len);
  if (reference.size() < std::min(training, symbols_rx.size()))
    throw ArgumentError("run_block_lms: reference shorter than training_len");

  BlockResult res;
  res.trace.resize(symbols_rx.size());
  cdouble w(1.0, 0.0);
  for (Eigen::Index k = 0; k < symbols_rx.size(); ++k) {
    const cdouble r = symbols_rx(k);
    const bool train = k < training;
    const LmsStep s = lms_step(w, r, train ? std::optional<cdouble>(reference(k)) : std::nullopt, cfg);
    EqualizerOutput out;
    out.mode = train ? EqMode::training : EqMode::decision_directed;
    out.corrected = s.corrected;
    out.decided = s.decided;
    out.predicted_distortion = std::abs(w) > 0.0 ? 1.0 / w : cdouble(0.0, 0.0);
    out.decision_distortion = r / s.decided;
    res.trace.record(k, r, out);
    w = s.w;
  }
  res.corrected = res.trace.corrected;
  return res;
}

}  // namespace fopaeq
