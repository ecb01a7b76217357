#include "disco/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

namespace disco {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("auc: bad inputs");
    size_t n_pos = 0;
    for (const int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("auc: labels must be 0/1");
        n_pos += static_cast<size_t>(y);
    }
    const size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("AUC undefined: labels are single-class");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Average ranks across tie groups, accumulate positive ranks.
    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t t = i; t <= j; ++t)
            if (labels[order[t]] == 1) pos_rank_sum += avg_rank;
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double logloss(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("logloss: bad inputs");
    double total = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const double p = std::clamp(scores[i], 1e-7, 1.0 - 1e-7);
        total += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(scores.size());
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size() || u.empty()) throw std::invalid_argument("cosine: bad inputs");
    double uv = 0.0, uu = 0.0, vv = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw std::invalid_argument("cosine: zero vector");
    return uv / (std::sqrt(uu) * std::sqrt(vv));
}

std::vector<size_t> long_tail_slice(const std::vector<SampleWindow>& test,
                                    const std::map<std::string, int>& train_freq) {
    if (train_freq.empty()) throw std::invalid_argument("long_tail_slice: empty frequency table");
    // Item universe: everything seen in training plus test-only items at 0.
    std::map<std::string, int> universe = train_freq;
    for (const SampleWindow& w : test) universe.try_emplace(w.target.item_key, 0);

    std::vector<std::pair<int, std::string>> ranked;
    ranked.reserve(universe.size());
    for (const auto& [key, freq] : universe) ranked.emplace_back(freq, key);
    std::sort(ranked.begin(), ranked.end());

    const size_t cut = universe.size() / 10;
    std::set<std::string> tail;
    for (size_t i = 0; i < cut; ++i) tail.insert(ranked[i].second);

    std::vector<size_t> out;
    for (size_t i = 0; i < test.size(); ++i)
        if (tail.count(test[i].target.item_key)) out.push_back(i);
    return out;
}

EvalReport evaluate(const DiscoModel& model, const std::vector<SampleWindow>& samples) {
    if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
    const std::vector<double> scores = model.predict(samples);
    std::vector<int> labels(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) labels[i] = samples[i].target.label;
    EvalReport r;
    r.samples = samples.size();
    r.auc = auc(scores, labels);
    r.logloss = logloss(scores, labels);
    return r;
}

void write_report(std::ostream& os, const EvalReport& report) {
    char buf[64];
    const auto emit = [&](const std::string& prefix, const EvalReport& r) {
        std::snprintf(buf, sizeof(buf), "%.6f", r.auc);
        os << prefix << "auc: " << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.6f", r.logloss);
        os << prefix << "logloss: " << buf << "\n";
        os << prefix << "samples: " << r.samples << "\n";
    };
    emit("", report);
    for (const auto& [name, sub] : report.slices) emit(name + ".", sub);
}

void export_patterns(const DiscoModel& model, std::span<const SampleWindow> samples,
                     const std::string& path) {
    const ModelConfig& cfg = model.config();
    if (!(cfg.flags.tt && cfg.flags.ss && cfg.flags.ts && cfg.flags.st))
        throw std::invalid_argument("export_patterns: all four patterns must be enabled");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write pattern export: " + path);

    const int d = cfg.dim;
    const char* names[4] = {"h_tt", "h_ss", "h_ts", "h_st"};
    for (int b = 0; b < 4; ++b)
        for (int j = 0; j < d; ++j) out << names[b] << '_' << j << '\t';
    out << "label\n";

    char buf[32];
    const size_t slab = 512;
    for (size_t off = 0; off < samples.size(); off += slab) {
        const size_t n = std::min(slab, samples.size() - off);
        Graph g;
        const DiscoModel::BatchOut batch = model.forward(g, samples.subspan(off, n));
        for (size_t i = 0; i < n; ++i) {
            const Tensor* blocks[4] = {&batch.h_tt, &batch.h_ss, &batch.h_ts, &batch.h_st};
            for (const Tensor* block : blocks) {
                for (int j = 0; j < d; ++j) {
                    std::snprintf(buf, sizeof(buf), "%.17g",
                                  block->at(static_cast<int>(i), j));
                    out << buf << '\t';
                }
            }
            out << batch.labels[i] << "\n";
        }
    }
    if (!out) throw std::runtime_error("pattern export write failed: " + path);
}

}  // namespace disco
