// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "avse/dsp.hpp"
#include "avse/masks.hpp"

namespace avse::eval {

struct ConfusionCounts {
  int64_t tp = 0;
  int64_t tn = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t total() const { return tp + tn + fp + fn; }
};

/// Cell-wise confusion of an estimated mask against the IBM reference.
ConfusionCounts confusion(const maskcore::BinaryMask& est, const maskcore::BinaryMask& ibm);

/// Fraction of cells where est == ibm.
double tf_accuracy(const maskcore::BinaryMask& est, const maskcore::BinaryMask& ibm);

/// hit = TP / #(ibm==1), fa = FP / #(ibm==0). Throws UndefinedRate when the
/// reference contains a single class.
std::pair<double, double> hit_fa(const maskcore::BinaryMask& est, const maskcore::BinaryMask& ibm);

/// Scale-invariant SDR in dB, capped at +100. Signals are cropped to the
/// shorter length; a silent reference throws DegenerateSignal.
double si_sdr(const dsp::Waveform& est, const dsp::Waveform& ref);

/// Mean per-frame SNR in dB over non-silent reference frames, each frame
/// clamped to [floor_db, ceil_db].
double seg_snr(const dsp::Waveform& est, const dsp::Waveform& ref, double frame_ms = 32.0,
               double floor_db = -10.0, double ceil_db = 35.0);

/// Per-utterance metric bundle fed to aggregate().
struct UttMetrics {
  double snr_db = 0.0;
  std::string variant;
  ConfusionCounts conf;      // pooled over evaluated frames
  bool has_mask_metrics = true;
  double si_sdr_db = 0.0;
  double seg_snr_db = 0.0;
  int64_t n_frames = 0;
};

struct ReportRow {
  double snr_db = 0.0;
  std::string variant;
  double tf_acc = 0.0;
  double hit = 0.0;
  double fa = 0.0;
  double hit_minus_fa = 0.0;
  double si_sdr_db = 0.0;
  double seg_snr_db = 0.0;
  int64_t n_frames = 0;
  int64_t n_utts = 0;
};

/// Groups by (snr_db, variant): mask metrics from pooled confusion counts
/// (i.e. frame-weighted), waveform metrics as utterance means. Rows come out
/// sorted by snr then variant.
std::vector<ReportRow> aggregate(const std::vector<UttMetrics>& utts);

/// Tab-separated report with a fixed header:
/// snr_db variant tf_acc hit fa hit_fa si_sdr seg_snr n_frames n_utts
void write_report(std::ostream& os, const std::vector<ReportRow>& rows);

}  // namespace avse::eval
