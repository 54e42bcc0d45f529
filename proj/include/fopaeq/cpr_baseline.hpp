#pragma once

// One-tap LMS carrier phase recovery:
//   z = w r,  e = d - z,  w <- w + mu e conj(r)
// with d the reference symbol while training and the slicer output after.

#include <cstddef>
#include <optional>

#include "fopaeq/equalizer.hpp"
#include "fopaeq/txrx_dsp.hpp"
#include "fopaeq/types.hpp"

namespace fopaeq {

struct LmsConfig {
  double mu = 0.01;
  std::size_t training_len = 2000;
  const Constellation* constellation = &Constellation::qam16();

  void validate() const;
};

struct LmsStep {
  cdouble w;
  cdouble corrected;
  cdouble decided;
};

LmsStep lms_step(cdouble w, cdouble r, std::optional<cdouble> reference, const LmsConfig& cfg);

// Trace columns follow EqualizerTrace with d_hat = 1 / w and d~ = r / [z]_D.
BlockResult run_block_lms(const ComplexSeq& symbols_rx, const ComplexSeq& reference, const LmsConfig& cfg);

}  // namespace fopaeq
