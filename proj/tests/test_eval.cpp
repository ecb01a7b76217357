#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "disco/eval.hpp"
#include "disco/rng.hpp"
#include "disco/synth.hpp"
#include "disco/training.hpp"

using namespace disco;

namespace {

// O(n^2) pair-counting oracle: P(s+ > s-) + 0.5 P(tie).
double auc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("auc: stated examples") {
    CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
    CHECK(auc(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) == 0.5);
    CHECK_THROWS_AS(auc(std::vector<double>{0.5, 0.4}, std::vector<int>{1, 1}),
                    std::invalid_argument);
}

TEST_CASE("auc matches the pair-counting oracle on 1000 random cases") {
    Rng rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + rng.uniform_int(40);
        std::vector<double> scores(static_cast<size_t>(n));
        std::vector<int> labels(static_cast<size_t>(n));
        bool pos = false, neg = false;
        for (int i = 0; i < n; ++i) {
            // quantized scores force tie groups
            scores[static_cast<size_t>(i)] = rng.uniform_int(8) / 8.0;
            labels[static_cast<size_t>(i)] = rng.uniform_int(2);
            pos = pos || labels[static_cast<size_t>(i)] == 1;
            neg = neg || labels[static_cast<size_t>(i)] == 0;
        }
        if (!pos) labels[0] = 1;
        if (!neg) labels[static_cast<size_t>(n) - 1] = 0;
        CHECK(std::fabs(auc(scores, labels) - auc_pairs(scores, labels)) < 1e-12);
    }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
    Rng rng(22);
    std::vector<double> scores(60);
    std::vector<int> labels(60);
    for (size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.uniform(-4, 4);
        labels[i] = rng.uniform_int(2);
    }
    labels[0] = 1;
    labels[1] = 0;
    const double base = auc(scores, labels);
    std::vector<double> warped = scores;
    for (double& s : warped) s = std::exp(0.3 * s) + 7.0;
    CHECK(auc(warped, labels) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("logloss: examples, clipping floor, and reference arithmetic") {
    const std::vector<int> labels = {1, 0, 1};
    CHECK(logloss(std::vector<double>{1.0, 0.0, 1.0}, labels) <= 1e-6);
    CHECK(std::fabs(logloss(std::vector<double>{0.5, 0.5, 0.5}, labels) -
                    std::log(2.0)) < 1e-12);

    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + rng.uniform_int(20);
        std::vector<double> scores(static_cast<size_t>(n));
        std::vector<int> ys(static_cast<size_t>(n));
        double want = 0.0;
        for (int i = 0; i < n; ++i) {
            scores[static_cast<size_t>(i)] = rng.uniform();
            ys[static_cast<size_t>(i)] = rng.uniform_int(2);
            const double p =
                std::min(1.0 - 1e-7, std::max(1e-7, scores[static_cast<size_t>(i)]));
            want += ys[static_cast<size_t>(i)] ? -std::log(p) : -std::log1p(-p);
        }
        want /= n;
        CHECK(std::fabs(logloss(scores, ys) - want) < 1e-12);
    }
}

TEST_CASE("logloss symmetry under label/score complement") {
    Rng rng(24);
    std::vector<double> scores(30);
    std::vector<int> labels(30);
    for (size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.uniform();
        labels[i] = rng.uniform_int(2);
    }
    std::vector<double> inv_scores = scores;
    std::vector<int> inv_labels = labels;
    for (double& s : inv_scores) s = 1.0 - s;
    for (int& y : inv_labels) y = 1 - y;
    CHECK(logloss(scores, labels) == logloss(inv_scores, inv_labels));
}

TEST_CASE("cosine basics") {
    const std::vector<double> x = {1, 2, 3};
    const std::vector<double> nx = {-1, -2, -3};
    const std::vector<double> e1 = {1, 0, 0};
    const std::vector<double> e2 = {0, 1, 0};
    CHECK(cosine(x, x) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine(x, nx) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(cosine(e1, e2) == 0.0);
    CHECK_THROWS_AS(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 1}),
                    std::invalid_argument);
}

TEST_CASE("long-tail slice: floor cut, zero-frequency items, and oracle") {
    // 10 items with distinct frequencies -> exactly 1 long-tail item
    std::map<std::string, int> freq;
    for (int i = 0; i < 10; ++i) freq["i" + std::to_string(i)] = i + 1;
    std::vector<SampleWindow> test;
    for (int i = 0; i < 10; ++i) {
        SampleWindow w;
        w.target.item_key = "i" + std::to_string(i);
        w.target.label = i % 2;
        test.push_back(w);
    }
    const auto slice = long_tail_slice(test, freq);
    REQUIRE(slice.size() == 1);
    CHECK(test[slice[0]].target.item_key == "i0");

    // an item absent from training sorts first at frequency 0
    SampleWindow unseen;
    unseen.target.item_key = "brand_new";
    test.push_back(unseen);
    const auto slice2 = long_tail_slice(test, freq);
    // universe now has 11 items -> floor(1.1) = 1 long-tail item: brand_new
    REQUIRE(slice2.size() == 1);
    CHECK(test[slice2[0]].target.item_key == "brand_new");

    CHECK_THROWS_AS(long_tail_slice(test, {}), std::invalid_argument);
}

TEST_CASE("long-tail slice matches a brute-force sort-and-cut and partitions the set") {
    Rng rng(25);
    std::map<std::string, int> freq;
    for (int i = 0; i < 57; ++i)
        freq["i" + std::to_string(i)] = rng.uniform_int(9);
    std::vector<SampleWindow> test;
    for (int n = 0; n < 300; ++n) {
        SampleWindow w;
        w.target.item_key = "i" + std::to_string(rng.uniform_int(70));  // some unseen
        test.push_back(w);
    }
    const auto slice = long_tail_slice(test, freq);

    // independent reimplementation
    std::map<std::string, int> uni = freq;
    for (const auto& w : test) uni.try_emplace(w.target.item_key, 0);
    std::vector<std::pair<int, std::string>> ranked;
    for (const auto& [k, f] : uni) ranked.emplace_back(f, k);
    std::sort(ranked.begin(), ranked.end());
    std::set<std::string> tail;
    for (size_t i = 0; i < uni.size() / 10; ++i) tail.insert(ranked[i].second);
    std::vector<size_t> want;
    for (size_t i = 0; i < test.size(); ++i)
        if (tail.count(test[i].target.item_key)) want.push_back(i);
    CHECK(slice == want);

    // slice plus complement partitions the test set
    std::set<size_t> in_slice(slice.begin(), slice.end());
    size_t complement = 0;
    for (size_t i = 0; i < test.size(); ++i)
        if (!in_slice.count(i)) ++complement;
    CHECK(in_slice.size() + complement == test.size());
}

TEST_CASE("export_patterns: row and field counts, deterministic re-export") {
    SynthSpec spec;
    spec.n_users = 15;
    spec.n_items = 10;
    spec.n_tab_classes = 3;
    spec.n_sem_classes = 3;
    spec.events_per_user = 5;
    spec.seed = 3;
    SynthData data = synth_generate(spec);
    auto windows = build_windows(data.log, 4);
    FieldSchema schema;
    schema.item_fields = {"item_id", "category"};
    Vocab vocab = build_vocab(windows, schema, data.catalog);
    KnowledgeBase kb = build_kb(data.catalog.items, StubEncoder(16, 3), "item");

    ModelConfig mc;
    mc.dim = 8;
    mc.window = 4;
    mc.init_seed = 2;
    DiscoModel model(mc, vocab, schema, data.catalog, &kb);

    export_patterns(model, windows, "patterns_a.tsv");
    export_patterns(model, windows, "patterns_b.tsv");

    std::ifstream a("patterns_a.tsv");
    std::stringstream sa;
    sa << a.rdbuf();
    std::ifstream b("patterns_b.tsv");
    std::stringstream sb;
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());

    std::istringstream lines(sa.str());
    std::string line;
    size_t rows = 0;
    bool first = true;
    while (std::getline(lines, line)) {
        const size_t fields = 1 + std::count(line.begin(), line.end(), '\t');
        if (first) {
            first = false;
            CHECK(fields == 4 * 8 + 1);  // header names every slot + label
            CHECK(line.rfind("h_tt_0\t", 0) == 0);
            continue;
        }
        CHECK(fields == 4 * 8 + 1);
        ++rows;
    }
    CHECK(rows == windows.size());
    std::remove("patterns_a.tsv");
    std::remove("patterns_b.tsv");
}

TEST_CASE("evaluate produces a coherent report block") {
    SynthSpec spec;
    spec.n_users = 20;
    spec.n_items = 12;
    spec.n_tab_classes = 3;
    spec.n_sem_classes = 3;
    spec.events_per_user = 5;
    spec.seed = 8;
    SynthData data = synth_generate(spec);
    auto windows = build_windows(data.log, 4);
    FieldSchema schema;
    schema.item_fields = {"item_id", "category"};
    Vocab vocab = build_vocab(windows, schema, data.catalog);
    KnowledgeBase kb = build_kb(data.catalog.items, StubEncoder(16, 3), "item");
    ModelConfig mc;
    mc.dim = 8;
    mc.window = 4;
    DiscoModel model(mc, vocab, schema, data.catalog, &kb);

    EvalReport r = evaluate(model, windows);
    CHECK(r.auc >= 0.0);
    CHECK(r.auc <= 1.0);
    CHECK(r.logloss >= 0.0);
    CHECK(r.samples == windows.size());
    r.slices.emplace_back("long_tail", EvalReport{0.5, 0.7, 3, {}});

    std::ostringstream os;
    write_report(os, r);
    CHECK(os.str().find("auc: ") == 0);
    CHECK(os.str().find("long_tail.auc: 0.500000") != std::string::npos);
    CHECK(os.str().find("long_tail.samples: 3") != std::string::npos);
}
