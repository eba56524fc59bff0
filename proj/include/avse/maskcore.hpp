// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "avse/common.hpp"
#include "avse/dsp.hpp"
#include "avse/masks.hpp"

namespace avse::maskcore {

/// Local criterion: the dB threshold a T-F unit's SNR must exceed for the
/// ideal binary mask to keep it.
struct MaskCriterion {
  double lc_db = 0.0;
};

/// Per-cell 10*log10((S+eps)/(N+eps)) with eps = 1e-12; silent cells in both
/// spectra come out at 0 dB instead of NaN.
Matrix local_snr_db(const dsp::PowerSpectrum& speech, const dsp::PowerSpectrum& noise);

/// Mask entry is 1 iff the local SNR strictly exceeds c.lc_db. Speech and
/// noise must be spectra of the premixed clean and scaled-noise signals
/// computed with the same FrameSpec.
BinaryMask ideal_binary_mask(const dsp::PowerSpectrum& speech,
                             const dsp::PowerSpectrum& noise, MaskCriterion c);

/// Entry is 1 iff m(t,f) strictly exceeds theta; theta must lie in [0,1].
BinaryMask threshold_mask(const SoftMask& m, double theta);

}  // namespace avse::maskcore
