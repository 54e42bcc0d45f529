#pragma once

// Decision-directed distortion compensation around the kernel filter.
//
// Per symbol n:
//   d_hat  = predict(state, [d~_{n-1} ... d~_{n-L}])   (1 during warm-up)
//   z      = r / d_hat
//   [z]_D  = slicer(z), or the reference symbol while training
//   d~_n   = r / [z]_D
// and the filter learns the pair (lag vector, d~_n).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fopaeq/kernel_core.hpp"
#include "fopaeq/txrx_dsp.hpp"
#include "fopaeq/types.hpp"

namespace fopaeq {

struct EqualizerConfig {
  KernelParams<double> kernel;
  std::size_t training_len = 2000;
  const Constellation* constellation = &Constellation::qam16();

  void validate() const;
};

enum class EqMode : std::uint8_t { training, decision_directed };

// Last L decision-driven distortions, newest first, initialised to 1.
class DistortionHistory {
 public:
  DistortionHistory() = default;
  explicit DistortionHistory(std::size_t block_l);

  void push(cdouble d);
  const ComplexSeq& values() const { return values_; }
  RealSeq composite() const;
  // Number of distortions pushed so far.
  std::size_t pushed() const { return pushed_; }

  // Last usable prediction (1 before the first one).
  cdouble last_prediction = cdouble(1.0, 0.0);

 private:
  ComplexSeq values_;
  std::size_t pushed_ = 0;
};

struct EqualizerOutput {
  cdouble corrected;
  cdouble decided;
  cdouble predicted_distortion;
  cdouble decision_distortion;
  EqMode mode = EqMode::training;
  bool clamped = false;         // |d_hat| fell below the division guard
  bool update_skipped = false;  // numerical guard rejected the filter update
};

struct EqualizerStep {
  SwkrlsState<double> state;
  DistortionHistory history;
  EqualizerOutput output;
};

inline constexpr double kDivisionGuard = 1e-9;

// Functional form; `reference` must be present exactly in training mode.
EqualizerStep step(SwkrlsState<double> state, DistortionHistory history, cdouble r,
                   std::optional<cdouble> reference, const EqualizerConfig& cfg);

// In-place form of step() used by the block drivers.
EqualizerOutput step_in_place(SwkrlsState<double>& state, DistortionHistory& history, cdouble r,
                              std::optional<cdouble> reference, const EqualizerConfig& cfg);

struct EqualizerTrace {
  ComplexSeq received;
  ComplexSeq predicted;  // d_hat
  ComplexSeq decision_distortion;  // d~
  ComplexSeq corrected;  // z
  ComplexSeq decided;    // [z]_D
  std::vector<EqMode> mode;
  std::size_t skipped_updates = 0;
  std::size_t clamped = 0;

  void resize(Eigen::Index n);
  void record(Eigen::Index k, cdouble r, const EqualizerOutput& out);
  Eigen::Index size() const { return received.size(); }
};

struct BlockResult {
  ComplexSeq corrected;
  EqualizerTrace trace;
};

// First training_len symbols use `reference`; the rest are decision directed.
BlockResult run_block(const ComplexSeq& symbols_rx, const ComplexSeq& reference, const EqualizerConfig& cfg);

// n,r_re,r_im,dhat_re,dhat_im,dtilde_re,dtilde_im,z_re,z_im,dec_re,dec_im,mode
void write_trace_csv(std::ostream& os, const EqualizerTrace& trace);

}  // namespace fopaeq
