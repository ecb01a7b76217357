#include "disco/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "disco/rng.hpp"

namespace disco {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string padded_id(char prefix, int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c%05d", prefix, index);
    return buf;
}

}  // namespace

void SynthSpec::validate() const {
    if (n_users < 2 || n_items < 2) throw std::invalid_argument("synth: too few users/items");
    if (n_tab_classes < 2 || n_sem_classes < 2)
        throw std::invalid_argument("synth: class counts must be >= 2");
    if (events_per_user < 1) throw std::invalid_argument("synth: events_per_user must be >= 1");
    if (w_tab == 0.0 && w_sem == 0.0)
        throw std::invalid_argument("synth: degenerate spec, both logit weights are zero");
    if (tokens_per_class < 1 || tokens_per_item < 1)
        throw std::invalid_argument("synth: token counts must be >= 1");
    if (tokens_per_item > tokens_per_class)
        throw std::invalid_argument("synth: tokens_per_item exceeds tokens_per_class");
    if (shared_per_item > shared_tokens)
        throw std::invalid_argument("synth: shared_per_item exceeds shared_tokens");
}

double SynthData::true_prob(int user, int item) const {
    const double logit = spec.w_tab * (user_tab_pref[user] == item_tab_class[item] ? 1.0 : 0.0) +
                         spec.w_sem * (user_sem_pref[user] == item_sem_class[item] ? 1.0 : 0.0) +
                         spec.bias;
    return sigmoid(logit);
}

int SynthData::parse_index(const std::string& id) {
    if (id.size() < 2) throw std::invalid_argument("malformed synthetic id: " + id);
    return std::stoi(id.substr(1));
}

double SynthData::true_prob(const std::string& user_id, const std::string& item_key) const {
    return true_prob(parse_index(user_id), parse_index(item_key));
}

double SynthData::tabular_only_prob(int user, int item) const {
    const double tab = spec.w_tab * (user_tab_pref[user] == item_tab_class[item] ? 1.0 : 0.0);
    const double p_match = 1.0 / spec.n_sem_classes;
    return p_match * sigmoid(tab + spec.w_sem + spec.bias) +
           (1.0 - p_match) * sigmoid(tab + spec.bias);
}

double SynthData::tabular_only_prob(const std::string& user_id,
                                    const std::string& item_key) const {
    return tabular_only_prob(parse_index(user_id), parse_index(item_key));
}

SynthData synth_generate(const SynthSpec& spec) {
    spec.validate();
    SynthData data;
    data.spec = spec;

    Rng class_rng(derive_seed(spec.seed, "synth.classes"));
    Rng token_rng(derive_seed(spec.seed, "synth.tokens"));
    Rng event_rng(derive_seed(spec.seed, "synth.events"));

    data.item_tab_class.resize(spec.n_items);
    data.item_sem_class.resize(spec.n_items);
    data.user_tab_pref.resize(spec.n_users);
    data.user_sem_pref.resize(spec.n_users);
    for (int i = 0; i < spec.n_items; ++i) {
        data.item_tab_class[i] = class_rng.uniform_int(spec.n_tab_classes);
        data.item_sem_class[i] = class_rng.uniform_int(spec.n_sem_classes);
    }
    for (int u = 0; u < spec.n_users; ++u) {
        data.user_tab_pref[u] = class_rng.uniform_int(spec.n_tab_classes);
        data.user_sem_pref[u] = class_rng.uniform_int(spec.n_sem_classes);
    }

    // Item descriptions: tokens_per_item distinct words from the item's
    // semantic-class vocabulary plus a few class-independent filler words.
    for (int i = 0; i < spec.n_items; ++i) {
        const int sem = data.item_sem_class[i];
        std::vector<int> pool(spec.tokens_per_class);
        for (int t = 0; t < spec.tokens_per_class; ++t) pool[t] = t;
        token_rng.shuffle(pool);
        std::string title;
        for (int t = 0; t < spec.tokens_per_item; ++t) {
            if (t) title += ' ';
            title += "w" + std::to_string(sem) + "x" + std::to_string(pool[t]);
        }
        for (int t = 0; t < spec.shared_per_item; ++t) {
            title += " c" + std::to_string(token_rng.uniform_int(spec.shared_tokens));
        }
        ItemRecord rec;
        rec.item_key = padded_id('i', i);
        rec.fields.emplace_back("category", "cat" + std::to_string(data.item_tab_class[i]));
        rec.fields.emplace_back("title", title);
        data.catalog.add(std::move(rec));
    }

    // Impressions are uniform over items; labels follow the closed-form
    // probability. One event per user per tick keeps global timestamps
    // interleaved across users so the temporal split cuts every user's
    // history, not whole users.
    for (int t = 0; t < spec.events_per_user; ++t) {
        for (int u = 0; u < spec.n_users; ++u) {
            const int item = event_rng.uniform_int(spec.n_items);
            const double p = data.true_prob(u, item);
            const int label = event_rng.uniform() < p ? 1 : 0;
            Interaction ev;
            ev.user_id = padded_id('u', u);
            ev.item_key = padded_id('i', item);
            ev.rating = label ? 5.0 : 1.0;
            ev.timestamp = static_cast<int64_t>(t) * spec.n_users + u;
            ev.label = label;
            data.log.push_back(std::move(ev));
        }
    }
    return data;
}

void synth_write(const SynthData& data, const std::string& out_dir) {
    write_items_csv(out_dir + "/items.csv", data.catalog);
    write_interactions_csv(out_dir + "/interactions.csv", data.log);

    std::set<std::pair<std::string, std::string>> pairs;
    for (const Interaction& ev : data.log) pairs.emplace(ev.user_id, ev.item_key);
    std::ofstream out(out_dir + "/pair_probs.tsv");
    if (!out) throw std::runtime_error("cannot write pair_probs.tsv in " + out_dir);
    char buf[32];
    for (const auto& [user, item] : pairs) {
        std::snprintf(buf, sizeof(buf), "%.17g", data.true_prob(user, item));
        out << user << '\t' << item << '\t' << buf << '\n';
    }
}

SynthSpec parse_synth_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open synth spec: " + path);
    SynthSpec spec;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto strip = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        line = strip(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("synth spec line " + std::to_string(lineno) +
                                     ": expected key=value");
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        if (key == "n_users") spec.n_users = std::stoi(value);
        else if (key == "n_items") spec.n_items = std::stoi(value);
        else if (key == "n_tab_classes") spec.n_tab_classes = std::stoi(value);
        else if (key == "n_sem_classes") spec.n_sem_classes = std::stoi(value);
        else if (key == "events_per_user") spec.events_per_user = std::stoi(value);
        else if (key == "w_tab") spec.w_tab = std::stod(value);
        else if (key == "w_sem") spec.w_sem = std::stod(value);
        else if (key == "bias") spec.bias = std::stod(value);
        else if (key == "tokens_per_class") spec.tokens_per_class = std::stoi(value);
        else if (key == "tokens_per_item") spec.tokens_per_item = std::stoi(value);
        else if (key == "shared_tokens") spec.shared_tokens = std::stoi(value);
        else if (key == "shared_per_item") spec.shared_per_item = std::stoi(value);
        else if (key == "seed") spec.seed = std::stoull(value);
        else throw std::runtime_error("unknown synth spec key: " + key);
    }
    return spec;
}

}  // namespace disco
