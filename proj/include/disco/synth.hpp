#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "disco/data.hpp"

namespace disco {

// Generator for the synthetic benchmark. Every item carries a latent tabular
// class (exposed as the categorical field "category") and a latent semantic
// class (exposed only through description tokens in the "title" field). Each
// user prefers one class on each side; the click logit rewards matches:
//
//   P(click) = sigmoid(w_tab * [category match] + w_sem * [semantic match] + bias)
//
// so the Bayes-optimal click probability of any (user, item) pair is known in
// closed form.
struct SynthSpec {
    int n_users = 2000;
    int n_items = 500;
    int n_tab_classes = 6;
    int n_sem_classes = 6;
    int events_per_user = 20;
    double w_tab = 2.0;
    double w_sem = 2.0;
    double bias = -1.0;
    int tokens_per_class = 24;   // per-class token vocabulary
    int tokens_per_item = 6;     // class tokens sampled per item
    int shared_tokens = 40;      // class-independent filler vocabulary
    int shared_per_item = 2;
    uint64_t seed = 7;

    void validate() const;
};

struct SynthData {
    SynthSpec spec;
    Catalog catalog;
    std::vector<Interaction> log;
    std::vector<int> item_tab_class;  // by item index
    std::vector<int> item_sem_class;
    std::vector<int> user_tab_pref;  // by user index
    std::vector<int> user_sem_pref;

    // Exact Bernoulli parameter for a (user, item) pair.
    double true_prob(int user, int item) const;
    double true_prob(const std::string& user_id, const std::string& item_key) const;
    // Best achievable prediction from tabular-side information only: the
    // semantic match is marginalized out at its prior rate.
    double tabular_only_prob(int user, int item) const;
    double tabular_only_prob(const std::string& user_id, const std::string& item_key) const;

    static int parse_index(const std::string& id);
};

SynthData synth_generate(const SynthSpec& spec);

// Writes items.csv, interactions.csv, and pair_probs.tsv (one row per unique
// logged pair: user_id, item_id, true_prob).
void synth_write(const SynthData& data, const std::string& out_dir);

// Parses a key=value spec file (same keys as SynthSpec members).
SynthSpec parse_synth_spec(const std::string& path);

}  // namespace disco
