#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "disco/semkb.hpp"

namespace disco {

// One (user, item, label, timestamp) event.
struct Interaction {
    std::string user_id;
    std::string item_key;
    double rating = 0.0;
    int64_t timestamp = 0;
    int label = 0;
};

// rating > 3 is a positive sample.
int binarize(double rating);

// A prediction target plus its behavior window. `history` holds the real
// (item_key, label) entries, most recent last; `history_mask` has the padded
// length K with false marking front padding.
struct SampleWindow {
    Interaction target;
    std::vector<std::pair<std::string, int>> history;
    std::vector<uint8_t> history_mask;
    std::vector<std::pair<std::string, std::string>> user_features;
    std::vector<std::pair<std::string, std::string>> context_features;
};

std::vector<SampleWindow> build_windows(const std::vector<Interaction>& log, int window_size);

struct SplitResult {
    std::vector<SampleWindow> train, valid, test;
};

// Global-timestamp 8:1:1 split; boundary ties stay with the earlier split via
// stable ordering.
SplitResult temporal_split(std::vector<SampleWindow> samples);

// Item catalog indexed by key.
struct Catalog {
    std::vector<ItemRecord> items;
    std::unordered_map<std::string, size_t> index;

    const ItemRecord& lookup(const std::string& key) const;
    bool contains(const std::string& key) const { return index.count(key) > 0; }
    void add(ItemRecord item);
};

using FieldValues = std::vector<std::pair<std::string, std::string>>;

// Fields whose values get embedding tables. item_fields may include the
// pseudo-field "item_id" (the key itself).
struct FieldSchema {
    std::vector<std::string> user_fields = {"user_id"};
    std::vector<std::string> item_fields;
    std::vector<std::string> context_fields;
};

// Per-field value -> index maps. Index 0 is reserved for OOV/padding;
// training-split values get dense indices from 1 in first-seen order.
class Vocab {
public:
    void observe(const std::string& field, const std::string& value);
    // Register the field with no values yet (its table is just the OOV row).
    void ensure_field(const std::string& field);
    int index_of(const std::string& field, const std::string& value) const;
    // Table row count for the field, including the reserved row 0.
    int field_size(const std::string& field) const;
    const std::vector<std::string>& fields() const { return field_order_; }
    bool has_field(const std::string& field) const { return maps_.count(field) > 0; }

private:
    std::map<std::string, std::unordered_map<std::string, int>> maps_;
    std::vector<std::string> field_order_;
};

// Resolve a sample's item fields per the schema (catalog lookup + item_id).
FieldValues item_field_values(const Catalog& catalog, const std::string& item_key,
                              const std::vector<std::string>& item_fields);

Vocab build_vocab(const std::vector<SampleWindow>& train, const FieldSchema& schema,
                  const Catalog& catalog);

// Interactions CSV: header "user_id,item_id,rating,timestamp".
std::vector<Interaction> read_interactions_csv(const std::string& path);
void write_interactions_csv(const std::string& path, const std::vector<Interaction>& log);

// Items CSV: header "item_id,<field1>,...".
Catalog read_items_csv(const std::string& path);
void write_items_csv(const std::string& path, const Catalog& catalog);

// Training-split frequency of each candidate item (for long-tail slicing).
std::map<std::string, int> item_frequencies(const std::vector<SampleWindow>& train);

}  // namespace disco
