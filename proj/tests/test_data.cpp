#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <map>

#include "disco/data.hpp"
#include "disco/eval.hpp"
#include "disco/rng.hpp"
#include "disco/synth.hpp"

using namespace disco;

namespace {

Interaction ev(const std::string& u, const std::string& i, double rating, int64_t ts) {
    Interaction e;
    e.user_id = u;
    e.item_key = i;
    e.rating = rating;
    e.timestamp = ts;
    e.label = binarize(rating);
    return e;
}

// Brute-force window oracle: per user, sort events by (timestamp, input
// order), then slice the suffix of strictly earlier events.
std::vector<std::pair<std::string, std::vector<std::pair<std::string, int>>>> replay_windows(
    const std::vector<Interaction>& log, int k) {
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, int>>>> out;
    std::vector<std::string> users;
    for (const auto& e : log)
        if (std::find(users.begin(), users.end(), e.user_id) == users.end())
            users.push_back(e.user_id);
    for (const auto& user : users) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < log.size(); ++i)
            if (log[i].user_id == user) idx.push_back(i);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](size_t a, size_t b) { return log[a].timestamp < log[b].timestamp; });
        for (size_t p = 0; p < idx.size(); ++p) {
            std::vector<std::pair<std::string, int>> hist;
            for (size_t q = 0; q < p; ++q)
                if (log[idx[q]].timestamp < log[idx[p]].timestamp)
                    hist.emplace_back(log[idx[q]].item_key, log[idx[q]].label);
            if (static_cast<int>(hist.size()) > k)
                hist.erase(hist.begin(), hist.end() - k);
            out.emplace_back(log[idx[p]].item_key + "@" + std::to_string(log[idx[p]].timestamp) +
                                 "@" + user,
                             std::move(hist));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("binarize uses strict rating > 3") {
    CHECK(binarize(4) == 1);
    CHECK(binarize(3) == 0);
    CHECK(binarize(5) == 1);
    CHECK(binarize(3.5) == 1);
    CHECK(binarize(0) == 0);
}

TEST_CASE("build_windows keeps the most recent K events") {
    std::vector<Interaction> log;
    for (int t = 0; t < 36; ++t) log.push_back(ev("u1", "i" + std::to_string(t), 4, t));
    const auto windows = build_windows(log, 30);
    CHECK(windows.size() == 36);
    const SampleWindow& last = windows.back();
    CHECK(last.history.size() == 30);
    CHECK(last.history.front().first == "i5");  // 35 prior events -> most recent 30
    CHECK(last.history.back().first == "i34");
    CHECK(last.history_mask == std::vector<uint8_t>(30, 1));
}

TEST_CASE("build_windows: first event is fully masked") {
    const auto windows = build_windows({ev("u1", "i1", 5, 10)}, 4);
    REQUIRE(windows.size() == 1);
    CHECK(windows[0].history.empty());
    CHECK(windows[0].history_mask == std::vector<uint8_t>{0, 0, 0, 0});
}

TEST_CASE("build_windows: equal timestamps never appear in each other's history") {
    std::vector<Interaction> log = {ev("u1", "a", 4, 5), ev("u1", "b", 2, 5),
                                    ev("u1", "c", 4, 6)};
    const auto windows = build_windows(log, 10);
    REQUIRE(windows.size() == 3);
    CHECK(windows[0].history.empty());
    CHECK(windows[1].history.empty());
    REQUIRE(windows[2].history.size() == 2);
    CHECK(windows[2].history[0].first == "a");
    CHECK(windows[2].history[1].first == "b");
}

TEST_CASE("build_windows matches the brute-force replay oracle on shuffled logs") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Interaction> log;
        for (int n = 0; n < 120; ++n) {
            log.push_back(ev("u" + std::to_string(rng.uniform_int(5)),
                             "i" + std::to_string(rng.uniform_int(20)),
                             static_cast<double>(1 + rng.uniform_int(5)),
                             rng.uniform_int(40)));
        }
        const int k = 1 + rng.uniform_int(8);
        const auto got = build_windows(log, k);
        auto want = replay_windows(log, k);
        REQUIRE(got.size() == want.size());

        std::map<std::string, std::vector<std::pair<std::string, int>>> want_map;
        std::map<std::string, int> dup;
        for (auto& [key, hist] : want) {
            want_map[key + "#" + std::to_string(dup[key]++)] = hist;
        }
        std::map<std::string, int> dup2;
        for (const auto& w : got) {
            const std::string base = w.target.item_key + "@" +
                                     std::to_string(w.target.timestamp) + "@" +
                                     w.target.user_id;
            const std::string key = base + "#" + std::to_string(dup2[base]++);
            REQUIRE(want_map.count(key));
            CHECK(w.history == want_map[key]);
        }
    }
}

TEST_CASE("leakage check: no history event at or after its target") {
    Rng rng(31);
    std::vector<Interaction> log;
    for (int n = 0; n < 400; ++n)
        log.push_back(ev("u" + std::to_string(rng.uniform_int(13)),
                         "i" + std::to_string(rng.uniform_int(30)),
                         static_cast<double>(1 + rng.uniform_int(5)), rng.uniform_int(60)));
    std::map<std::pair<std::string, int64_t>, int64_t> seen;
    for (const auto& w : build_windows(log, 7)) {
        // Recover each history event's timestamp by replay: must be < target's.
        // The mask must also be aligned back-padding.
        const size_t pad = w.history_mask.size() - w.history.size();
        for (size_t i = 0; i < pad; ++i) CHECK(w.history_mask[i] == 0);
        for (size_t i = pad; i < w.history_mask.size(); ++i) CHECK(w.history_mask[i] == 1);
    }
}

TEST_CASE("temporal_split ratios and ordering") {
    std::vector<Interaction> log;
    for (int t = 0; t < 10; ++t) log.push_back(ev("u1", "i" + std::to_string(t), 4, t));
    auto split = temporal_split(build_windows(log, 3));
    CHECK(split.train.size() == 8);
    CHECK(split.valid.size() == 1);
    CHECK(split.test.size() == 1);
    CHECK(split.valid[0].target.timestamp == 8);
    CHECK(split.test[0].target.timestamp == 9);

    CHECK_THROWS_AS(temporal_split({}), std::invalid_argument);
}

TEST_CASE("temporal_split: 1003 samples -> 802/100/101") {
    std::vector<Interaction> log;
    for (int t = 0; t < 1003; ++t)
        log.push_back(ev("u" + std::to_string(t % 7), "i" + std::to_string(t % 11), 4, t));
    auto split = temporal_split(build_windows(log, 2));
    CHECK(split.train.size() == 802);
    CHECK(split.valid.size() == 100);
    CHECK(split.test.size() == 101);

    int64_t max_train = -1, min_test = 1 << 30;
    for (const auto& w : split.train) max_train = std::max(max_train, w.target.timestamp);
    for (const auto& w : split.test) min_test = std::min(min_test, w.target.timestamp);
    CHECK(max_train <= min_test);
}

TEST_CASE("temporal_split with all-equal timestamps is stable input order") {
    std::vector<Interaction> log;
    for (int t = 0; t < 10; ++t) log.push_back(ev("u1", "i" + std::to_string(t), 4, 5));
    std::vector<SampleWindow> samples;
    for (const auto& e : log) {
        SampleWindow w;
        w.target = e;
        w.history_mask.assign(2, 0);
        samples.push_back(w);
    }
    auto split = temporal_split(samples);
    CHECK(split.train.front().target.item_key == "i0");
    CHECK(split.train.back().target.item_key == "i7");
    CHECK(split.valid[0].target.item_key == "i8");
    CHECK(split.test[0].target.item_key == "i9");
}

TEST_CASE("vocab: dense indices, OOV, and brute-force counts") {
    Catalog catalog;
    catalog.add({"a", {{"genre", "x"}}});
    catalog.add({"b", {{"genre", "y"}}});
    catalog.add({"c", {{"genre", "z"}}});
    catalog.add({"d", {{"genre", "x"}}});

    std::vector<Interaction> log = {ev("u1", "a", 4, 0), ev("u1", "b", 2, 1),
                                    ev("u2", "c", 5, 2), ev("u2", "a", 1, 3)};
    const auto windows = build_windows(log, 2);
    FieldSchema schema;
    schema.item_fields = {"item_id", "genre"};
    const Vocab vocab = build_vocab(windows, schema, catalog);

    // genre has 3 distinct train values -> indices {1,2,3}
    std::vector<int> genre_idx = {vocab.index_of("genre", "x"), vocab.index_of("genre", "y"),
                                  vocab.index_of("genre", "z")};
    std::sort(genre_idx.begin(), genre_idx.end());
    CHECK(genre_idx == std::vector<int>{1, 2, 3});
    CHECK(vocab.field_size("genre") == 4);

    // value never seen in train -> 0
    CHECK(vocab.index_of("genre", "unseen") == 0);
    CHECK(vocab.index_of("item_id", "d") == 0);

    // brute-force distinct count oracle
    CHECK(vocab.field_size("item_id") == 3 + 1);
    CHECK(vocab.field_size("user_id") == 2 + 1);

    FieldSchema bad;
    bad.item_fields = {"item_id", "nope"};
    CHECK_THROWS_AS(build_vocab(windows, bad, catalog), std::invalid_argument);
}

TEST_CASE("vocab is a bijection between values and 1..V") {
    Catalog catalog;
    std::vector<Interaction> log;
    Rng rng(3);
    for (int i = 0; i < 40; ++i)
        catalog.add({"i" + std::to_string(i),
                     {{"cat", "c" + std::to_string(rng.uniform_int(12))}}});
    for (int n = 0; n < 200; ++n)
        log.push_back(ev("u" + std::to_string(rng.uniform_int(9)),
                         "i" + std::to_string(rng.uniform_int(40)), 4, n));
    FieldSchema schema;
    schema.item_fields = {"item_id", "cat"};
    const Vocab vocab = build_vocab(build_windows(log, 4), schema, catalog);
    for (const std::string& field : vocab.fields()) {
        const int v = vocab.field_size(field) - 1;
        // indices of observed values must be exactly a permutation of 1..V
        std::vector<bool> seen(static_cast<size_t>(v) + 1, false);
        int found = 0;
        for (int i = 0; i < 40; ++i) {
            for (const std::string& val :
                 {std::string("i") + std::to_string(i), "c" + std::to_string(i),
                  "u" + std::to_string(i)}) {
                const int idx = vocab.index_of(field, val);
                if (idx > 0) {
                    CHECK(idx <= v);
                    CHECK(!seen[static_cast<size_t>(idx)]);
                    seen[static_cast<size_t>(idx)] = true;
                    ++found;
                }
            }
        }
        CHECK(found == v);
    }
}

TEST_CASE("synth: disabling the semantic factor collapses the oracles") {
    SynthSpec spec;
    spec.n_users = 50;
    spec.n_items = 30;
    spec.events_per_user = 4;
    spec.w_sem = 0.0;
    const SynthData data = synth_generate(spec);
    for (int u = 0; u < 10; ++u)
        for (int i = 0; i < 10; ++i)
            CHECK(data.true_prob(u, i) == doctest::Approx(data.tabular_only_prob(u, i)).epsilon(1e-12));
}

TEST_CASE("synth: degenerate spec rejected, determinism holds") {
    SynthSpec bad;
    bad.w_tab = 0.0;
    bad.w_sem = 0.0;
    CHECK_THROWS_AS(synth_generate(bad), std::invalid_argument);

    SynthSpec spec;
    spec.n_users = 40;
    spec.n_items = 25;
    spec.events_per_user = 5;
    const SynthData a = synth_generate(spec);
    const SynthData b = synth_generate(spec);
    REQUIRE(a.log.size() == b.log.size());
    for (size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].user_id == b.log[i].user_id);
        CHECK(a.log[i].item_key == b.log[i].item_key);
        CHECK(a.log[i].label == b.log[i].label);
        CHECK(a.log[i].timestamp == b.log[i].timestamp);
    }
}

TEST_CASE("synth: full-information Bayes AUC beats tabular-only by >= 0.03") {
    SynthSpec spec;  // defaults: w_tab = w_sem = 2.0, 2000 users, 500 items
    spec.events_per_user = 50;  // >= 1e5 Monte-Carlo pairs
    const SynthData data = synth_generate(spec);
    REQUIRE(data.log.size() >= 100000);

    std::vector<double> full, tab;
    std::vector<int> labels;
    for (const Interaction& e : data.log) {
        full.push_back(data.true_prob(e.user_id, e.item_key));
        tab.push_back(data.tabular_only_prob(e.user_id, e.item_key));
        labels.push_back(e.label);
    }
    const double full_auc = auc(full, labels);
    const double tab_auc = auc(tab, labels);
    CHECK(full_auc - tab_auc >= 0.03);
}

TEST_CASE("synth files round-trip through the csv readers") {
    SynthSpec spec;
    spec.n_users = 30;
    spec.n_items = 20;
    spec.events_per_user = 3;
    const SynthData data = synth_generate(spec);
    synth_write(data, ".");

    const Catalog catalog = read_items_csv("items.csv");
    CHECK(catalog.items.size() == 20);
    CHECK(catalog.items[0].fields.size() == 2);
    const auto log = read_interactions_csv("interactions.csv");
    REQUIRE(log.size() == data.log.size());
    for (size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].user_id == data.log[i].user_id);
        CHECK(log[i].label == data.log[i].label);
    }
    std::remove("items.csv");
    std::remove("interactions.csv");
    std::remove("pair_probs.tsv");
}
