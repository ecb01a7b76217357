#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "disco/data.hpp"
#include "disco/model.hpp"

namespace disco {

// Rank-based AUC with average ranks over score ties; equals the pair-counting
// estimate P(s+ > s-) + 0.5 P(tie). Requires both classes present.
double auc(std::span<const double> scores, std::span<const int> labels);

// Mean binary cross-entropy; scores clipped to [1e-7, 1 - 1e-7].
double logloss(std::span<const double> scores, std::span<const int> labels);

double cosine(std::span<const double> u, std::span<const double> v);

// Long-tail slice: items ranked by ascending training frequency (ties broken
// by key; items absent from training count 0), the bottom floor(10%) of the
// item universe are long-tail. Returns indices of test samples whose
// candidate is long-tail.
std::vector<size_t> long_tail_slice(const std::vector<SampleWindow>& test,
                                    const std::map<std::string, int>& train_freq);

struct EvalReport {
    double auc = 0.0;
    double logloss = 0.0;
    size_t samples = 0;
    std::vector<std::pair<std::string, EvalReport>> slices;
};

EvalReport evaluate(const DiscoModel& model, const std::vector<SampleWindow>& samples);

// "key: value" lines, slices prefixed as "<slice>.key: value".
void write_report(std::ostream& os, const EvalReport& report);

// Tab-separated (H_TT, H_SS, H_TS, H_ST, label) rows, one per sample, with a
// header naming each dimension slot.
void export_patterns(const DiscoModel& model, std::span<const SampleWindow> samples,
                     const std::string& path);

}  // namespace disco
