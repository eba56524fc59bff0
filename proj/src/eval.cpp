// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "avse/common.hpp"

namespace avse::eval {

using maskcore::BinaryMask;

namespace {

void check_shapes(const BinaryMask& a, const BinaryMask& b, const char* who) {
  if (a.frames != b.frames || a.bins != b.bins)
    throw ShapeError(std::string(who) + ": est " + std::to_string(a.frames) + "x" +
                     std::to_string(a.bins) + " vs ibm " + std::to_string(b.frames) + "x" +
                     std::to_string(b.bins));
}

}  // namespace

ConfusionCounts confusion(const BinaryMask& est, const BinaryMask& ibm) {
  check_shapes(est, ibm, "confusion");
  ConfusionCounts c;
  for (size_t i = 0; i < est.data.size(); ++i) {
    const bool e = est.data[i] != 0;
    const bool r = ibm.data[i] != 0;
    if (e && r) ++c.tp;
    else if (!e && !r) ++c.tn;
    else if (e && !r) ++c.fp;
    else ++c.fn;
  }
  return c;
}

double tf_accuracy(const BinaryMask& est, const BinaryMask& ibm) {
  const ConfusionCounts c = confusion(est, ibm);
  if (c.total() == 0) throw ShapeError("tf_accuracy: empty masks");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

std::pair<double, double> hit_fa(const BinaryMask& est, const BinaryMask& ibm) {
  const ConfusionCounts c = confusion(est, ibm);
  const int64_t pos = c.tp + c.fn;
  const int64_t neg = c.fp + c.tn;
  if (pos == 0) throw UndefinedRate("hit_fa: reference mask has no 1-cells");
  if (neg == 0) throw UndefinedRate("hit_fa: reference mask has no 0-cells");
  return {static_cast<double>(c.tp) / static_cast<double>(pos),
          static_cast<double>(c.fp) / static_cast<double>(neg)};
}

double si_sdr(const dsp::Waveform& est, const dsp::Waveform& ref) {
  const size_t n = std::min(est.samples.size(), ref.samples.size());
  if (n == 0) throw DegenerateSignal("si_sdr: empty signals");
  double dot = 0.0, ref_energy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    dot += est.samples[i] * ref.samples[i];
    ref_energy += ref.samples[i] * ref.samples[i];
  }
  if (ref_energy <= 0.0) throw DegenerateSignal("si_sdr: silent reference");
  const double alpha = dot / ref_energy;
  double target_energy = 0.0, noise_energy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = alpha * ref.samples[i];
    const double e = est.samples[i] - t;
    target_energy += t * t;
    noise_energy += e * e;
  }
  if (noise_energy <= 0.0) return 100.0;
  const double v = 10.0 * std::log10(target_energy / noise_energy);
  return std::min(100.0, std::max(-100.0, v));
}

double seg_snr(const dsp::Waveform& est, const dsp::Waveform& ref, double frame_ms,
               double floor_db, double ceil_db) {
  if (est.sample_rate != ref.sample_rate)
    throw Error("seg_snr: sample rates differ");
  const size_t n = std::min(est.samples.size(), ref.samples.size());
  const size_t frame = static_cast<size_t>(ref.sample_rate * frame_ms / 1000.0);
  if (frame == 0 || n == 0) throw DegenerateSignal("seg_snr: empty signals or frame");
  double sum = 0.0;
  int64_t used = 0;
  for (size_t start = 0; start + frame <= n; start += frame) {
    double re = 0.0, ee = 0.0;
    for (size_t i = start; i < start + frame; ++i) {
      re += ref.samples[i] * ref.samples[i];
      const double d = ref.samples[i] - est.samples[i];
      ee += d * d;
    }
    if (re < 1e-10) continue;  // silent reference frame
    double v;
    if (ee <= 0.0) {
      v = ceil_db;
    } else {
      v = 10.0 * std::log10(re / ee);
      v = std::min(ceil_db, std::max(floor_db, v));
    }
    sum += v;
    ++used;
  }
  if (used == 0) throw DegenerateSignal("seg_snr: all reference frames silent");
  return sum / static_cast<double>(used);
}

std::vector<ReportRow> aggregate(const std::vector<UttMetrics>& utts) {
  std::map<std::pair<double, std::string>, ReportRow> groups;
  std::map<std::pair<double, std::string>, ConfusionCounts> counts;
  std::map<std::pair<double, std::string>, bool> has_mask;
  for (const UttMetrics& u : utts) {
    const auto key = std::make_pair(u.snr_db, u.variant);
    ReportRow& row = groups[key];
    row.snr_db = u.snr_db;
    row.variant = u.variant;
    row.si_sdr_db += u.si_sdr_db;
    row.seg_snr_db += u.seg_snr_db;
    row.n_frames += u.n_frames;
    row.n_utts += 1;
    ConfusionCounts& c = counts[key];
    c.tp += u.conf.tp;
    c.tn += u.conf.tn;
    c.fp += u.conf.fp;
    c.fn += u.conf.fn;
    if (u.has_mask_metrics) has_mask[key] = true;
  }
  std::vector<ReportRow> rows;
  rows.reserve(groups.size());
  for (auto& [key, row] : groups) {
    row.si_sdr_db /= static_cast<double>(row.n_utts);
    row.seg_snr_db /= static_cast<double>(row.n_utts);
    const ConfusionCounts& c = counts[key];
    if (has_mask[key] && c.total() > 0) {
      row.tf_acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
      const int64_t pos = c.tp + c.fn;
      const int64_t neg = c.fp + c.tn;
      row.hit = pos > 0 ? static_cast<double>(c.tp) / static_cast<double>(pos)
                        : std::numeric_limits<double>::quiet_NaN();
      row.fa = neg > 0 ? static_cast<double>(c.fp) / static_cast<double>(neg)
                       : std::numeric_limits<double>::quiet_NaN();
      row.hit_minus_fa = row.hit - row.fa;
    } else {
      row.tf_acc = std::numeric_limits<double>::quiet_NaN();
      row.hit = std::numeric_limits<double>::quiet_NaN();
      row.fa = std::numeric_limits<double>::quiet_NaN();
      row.hit_minus_fa = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

void write_report(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "snr_db\tvariant\ttf_acc\thit\tfa\thit_fa\tsi_sdr\tseg_snr\tn_frames\tn_utts\n";
  char buf[64];
  const auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  for (const ReportRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%g", r.snr_db);
    os << buf << '\t' << r.variant << '\t' << fmt(r.tf_acc) << '\t' << fmt(r.hit) << '\t'
       << fmt(r.fa) << '\t' << fmt(r.hit_minus_fa) << '\t' << fmt(r.si_sdr_db) << '\t'
       << fmt(r.seg_snr_db) << '\t' << r.n_frames << '\t' << r.n_utts << '\n';
  }
}

}  // namespace avse::eval
