#include "disco/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "disco/csv.hpp"

namespace disco {

int binarize(double rating) { return rating > 3.0 ? 1 : 0; }

std::vector<SampleWindow> build_windows(const std::vector<Interaction>& log, int window_size) {
    if (window_size < 1) throw std::invalid_argument("window size must be >= 1");

    // Group per user preserving input order, then stable-sort by timestamp so
    // duplicate (user, timestamp) events keep their log order.
    std::vector<std::string> user_order;
    std::unordered_map<std::string, std::vector<size_t>> per_user;
    for (size_t i = 0; i < log.size(); ++i) {
        auto [it, inserted] = per_user.try_emplace(log[i].user_id);
        if (inserted) user_order.push_back(log[i].user_id);
        it->second.push_back(i);
    }

    const size_t k = static_cast<size_t>(window_size);
    std::vector<SampleWindow> out;
    out.reserve(log.size());
    for (const std::string& user : user_order) {
        std::vector<size_t>& idx = per_user[user];
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return log[a].timestamp < log[b].timestamp;
        });
        for (size_t pos = 0; pos < idx.size(); ++pos) {
            const Interaction& target = log[idx[pos]];
            // History must strictly precede the target; skip the contiguous
            // run of equal timestamps directly before it.
            size_t cut = pos;
            while (cut > 0 && log[idx[cut - 1]].timestamp == target.timestamp) --cut;
            const size_t take = std::min(cut, k);

            SampleWindow w;
            w.target = target;
            w.user_features.emplace_back("user_id", user);
            w.history_mask.assign(k, 0);
            for (size_t j = 0; j < take; ++j) {
                const Interaction& h = log[idx[cut - take + j]];
                w.history.emplace_back(h.item_key, h.label);
                w.history_mask[k - take + j] = 1;
            }
            out.push_back(std::move(w));
        }
    }
    return out;
}

SplitResult temporal_split(std::vector<SampleWindow> samples) {
    if (samples.empty()) throw std::invalid_argument("temporal_split: empty input");
    if (samples.size() < 10)
        throw std::invalid_argument("temporal_split: need at least 10 samples");
    std::stable_sort(samples.begin(), samples.end(),
                     [](const SampleWindow& a, const SampleWindow& b) {
                         return a.target.timestamp < b.target.timestamp;
                     });
    const size_t n = samples.size();
    const size_t n_train = n * 8 / 10;
    const size_t n_valid = n / 10;
    SplitResult r;
    r.train.assign(samples.begin(), samples.begin() + n_train);
    r.valid.assign(samples.begin() + n_train, samples.begin() + n_train + n_valid);
    r.test.assign(samples.begin() + n_train + n_valid, samples.end());
    return r;
}

const ItemRecord& Catalog::lookup(const std::string& key) const {
    const auto it = index.find(key);
    if (it == index.end()) throw std::out_of_range("item not in catalog: " + key);
    return items[it->second];
}

void Catalog::add(ItemRecord item) {
    if (index.count(item.item_key))
        throw std::invalid_argument("duplicate catalog item: " + item.item_key);
    index.emplace(item.item_key, items.size());
    items.push_back(std::move(item));
}

void Vocab::observe(const std::string& field, const std::string& value) {
    ensure_field(field);
    auto& m = maps_[field];
    if (!m.count(value)) {
        const int next = static_cast<int>(m.size()) + 1;
        m.emplace(value, next);
    }
}

void Vocab::ensure_field(const std::string& field) {
    auto [it, inserted] = maps_.try_emplace(field);
    if (inserted) field_order_.push_back(field);
}

int Vocab::index_of(const std::string& field, const std::string& value) const {
    const auto it = maps_.find(field);
    if (it == maps_.end()) throw std::out_of_range("vocab has no field: " + field);
    const auto vit = it->second.find(value);
    return vit == it->second.end() ? 0 : vit->second;
}

int Vocab::field_size(const std::string& field) const {
    const auto it = maps_.find(field);
    if (it == maps_.end()) throw std::out_of_range("vocab has no field: " + field);
    return static_cast<int>(it->second.size()) + 1;
}

FieldValues item_field_values(const Catalog& catalog, const std::string& item_key,
                              const std::vector<std::string>& item_fields) {
    const ItemRecord& rec = catalog.lookup(item_key);
    FieldValues out;
    out.reserve(item_fields.size());
    for (const std::string& f : item_fields) {
        if (f == "item_id") {
            out.emplace_back(f, item_key);
            continue;
        }
        bool found = false;
        for (const auto& [name, value] : rec.fields) {
            if (name == f) {
                out.emplace_back(f, value);
                found = true;
                break;
            }
        }
        if (!found)
            throw std::out_of_range("item " + item_key + " has no field '" + f + "'");
    }
    return out;
}

Vocab build_vocab(const std::vector<SampleWindow>& train, const FieldSchema& schema,
                  const Catalog& catalog) {
    if (train.empty()) throw std::invalid_argument("build_vocab: empty training split");

    // Validate the schema against the catalog columns up front.
    for (const std::string& f : schema.item_fields) {
        if (f == "item_id") continue;
        bool known = false;
        if (!catalog.items.empty()) {
            for (const auto& [name, value] : catalog.items.front().fields)
                if (name == f) known = true;
        }
        if (!known) throw std::invalid_argument("unknown item field in schema: " + f);
    }

    Vocab vocab;
    const auto observe_pairs = [&](const FieldValues& fv,
                                   const std::vector<std::string>& allowed) {
        for (const std::string& f : allowed)
            for (const auto& [name, value] : fv)
                if (name == f) vocab.observe(f, value);
    };

    for (const SampleWindow& w : train) {
        observe_pairs(w.user_features, schema.user_fields);
        observe_pairs(w.context_features, schema.context_fields);
        observe_pairs(item_field_values(catalog, w.target.item_key, schema.item_fields),
                      schema.item_fields);
        for (const auto& [key, label] : w.history)
            observe_pairs(item_field_values(catalog, key, schema.item_fields),
                          schema.item_fields);
    }
    // Make sure every schema field has a table even if unseen in train.
    for (const std::string& f : schema.user_fields) vocab.ensure_field(f);
    for (const std::string& f : schema.item_fields) vocab.ensure_field(f);
    for (const std::string& f : schema.context_fields) vocab.ensure_field(f);
    return vocab;
}

std::vector<Interaction> read_interactions_csv(const std::string& path) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw std::runtime_error("empty interactions file: " + path);
    const std::vector<std::string> expect = {"user_id", "item_id", "rating", "timestamp"};
    if (rows[0] != expect)
        throw std::runtime_error("interactions header must be user_id,item_id,rating,timestamp");
    std::vector<Interaction> out;
    out.reserve(rows.size() - 1);
    for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 4)
            throw std::runtime_error("interactions row has wrong column count");
        Interaction ev;
        ev.user_id = rows[i][0];
        ev.item_key = rows[i][1];
        ev.rating = std::stod(rows[i][2]);
        ev.timestamp = std::stoll(rows[i][3]);
        ev.label = binarize(ev.rating);
        out.push_back(std::move(ev));
    }
    return out;
}

void write_interactions_csv(const std::string& path, const std::vector<Interaction>& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write interactions: " + path);
    out << "user_id,item_id,rating,timestamp\n";
    char rating_buf[32];
    for (const Interaction& ev : log) {
        std::snprintf(rating_buf, sizeof(rating_buf), "%g", ev.rating);
        const std::vector<std::string> row = {ev.user_id, ev.item_key, rating_buf,
                                              std::to_string(ev.timestamp)};
        write_csv_row(out, row);
    }
}

Catalog read_items_csv(const std::string& path) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw std::runtime_error("empty items file: " + path);
    const auto& header = rows[0];
    if (header.empty() || header[0] != "item_id")
        throw std::runtime_error("items header must start with item_id");
    Catalog catalog;
    for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != header.size())
            throw std::runtime_error("items row has wrong column count");
        ItemRecord rec;
        rec.item_key = rows[i][0];
        for (size_t c = 1; c < header.size(); ++c)
            rec.fields.emplace_back(header[c], rows[i][c]);
        catalog.add(std::move(rec));
    }
    return catalog;
}

void write_items_csv(const std::string& path, const Catalog& catalog) {
    if (catalog.items.empty()) throw std::invalid_argument("cannot write empty catalog");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write items: " + path);
    std::vector<std::string> header = {"item_id"};
    for (const auto& [name, value] : catalog.items.front().fields) header.push_back(name);
    write_csv_row(out, header);
    for (const ItemRecord& rec : catalog.items) {
        std::vector<std::string> row = {rec.item_key};
        for (const auto& [name, value] : rec.fields) row.push_back(value);
        write_csv_row(out, row);
    }
}

std::map<std::string, int> item_frequencies(const std::vector<SampleWindow>& train) {
    std::map<std::string, int> freq;
    for (const SampleWindow& w : train) ++freq[w.target.item_key];
    return freq;
}

}  // namespace disco
