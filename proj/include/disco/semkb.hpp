#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace disco {

// One catalog item: opaque key plus ordered (field, value) pairs.
struct ItemRecord {
    std::string item_key;
    std::vector<std::pair<std::string, std::string>> fields;
};

// Field-value prompt: "Here is a {noun}, {f1} is {v1}, ..., and {fk} is {vk}."
std::string render_prompt(const ItemRecord& item, const std::string& category_noun);

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual std::string name() const = 0;
    virtual int output_dim() const = 0;
    // item_key lets file-backed encoders resolve precomputed vectors; the stub
    // uses only the text.
    virtual std::vector<double> encode(const std::string& item_key,
                                       const std::string& text) const = 0;
};

// Seeded signed-hash bag-of-tokens embedding, L2-normalized. Deterministic
// offline stand-in for an LLM encoder.
std::vector<double> stub_encode(const std::string& text, int output_dim, uint64_t seed);

class StubEncoder : public TextEncoder {
public:
    StubEncoder(int output_dim, uint64_t seed) : dim_(output_dim), seed_(seed) {}
    std::string name() const override;
    int output_dim() const override { return dim_; }
    std::vector<double> encode(const std::string&, const std::string& text) const override {
        return stub_encode(text, dim_, seed_);
    }

private:
    int dim_;
    uint64_t seed_;
};

// Serves precomputed vectors from a tab-separated import file
// ("#dim=<D>" header; rows "item_key<TAB>v1,v2,...").
class FileEncoder : public TextEncoder {
public:
    explicit FileEncoder(const std::string& path);
    std::string name() const override { return "file"; }
    int output_dim() const override { return dim_; }
    std::vector<double> encode(const std::string& item_key, const std::string&) const override;

private:
    int dim_ = 0;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Immutable map item_key -> semantic vector. Built once, then read-only.
class KnowledgeBase {
public:
    KnowledgeBase(int dim, std::string encoder_tag);

    int dim() const { return dim_; }
    const std::string& encoder_tag() const { return encoder_tag_; }
    size_t size() const { return entries_.size(); }
    bool contains(const std::string& key) const { return index_.count(key) > 0; }

    // Missing key is an error unless zero-fallback mode is enabled.
    const std::vector<double>& lookup(const std::string& key) const;
    void set_zero_fallback(bool enabled) { zero_fallback_ = enabled; }

    void insert(const std::string& key, std::vector<double> vec);

    const std::vector<std::pair<std::string, std::vector<double>>>& entries() const {
        return entries_;
    }

    // Binary format: "DISCOKB1", u32 LE dim, u64 LE count, then per entry
    // u16 LE key length, key bytes, dim f64 LE values. Bit-exact round trip.
    void save(const std::string& path) const;
    static KnowledgeBase load(const std::string& path);

    // Debug/import format: "#dim=<D>" header, rows "key<TAB>v1,v2,...".
    void save_tsv(const std::string& path) const;

private:
    int dim_;
    std::string encoder_tag_;
    bool zero_fallback_ = false;
    std::vector<double> zero_vec_;
    std::vector<std::pair<std::string, std::vector<double>>> entries_;
    std::unordered_map<std::string, size_t> index_;
};

KnowledgeBase build_kb(const std::vector<ItemRecord>& catalog, const TextEncoder& encoder,
                       const std::string& category_noun);

}  // namespace disco
