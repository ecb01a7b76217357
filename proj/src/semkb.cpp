#include "disco/semkb.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "disco/rng.hpp"
#include "disco/wire.hpp"

namespace disco {

namespace {

std::vector<double> parse_vector_csv(const std::string& s) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        const size_t comma = s.find(',', pos);
        const std::string tok =
            comma == std::string::npos ? s.substr(pos) : s.substr(pos, comma - pos);
        if (tok.empty()) throw std::runtime_error("malformed embedding vector");
        out.push_back(std::stod(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

constexpr char kKbMagic[] = "DISCOKB1";

}  // namespace

std::string render_prompt(const ItemRecord& item, const std::string& category_noun) {
    if (item.fields.empty()) throw std::invalid_argument("render_prompt: item has no fields");
    if (category_noun.empty())
        throw std::invalid_argument("render_prompt: empty category noun");
    std::string out = "Here is a " + category_noun;
    const size_t k = item.fields.size();
    for (size_t i = 0; i < k; ++i) {
        out += ", ";
        if (k > 1 && i == k - 1) out += "and ";
        out += item.fields[i].first + " is " + item.fields[i].second;
    }
    out += ".";
    return out;
}

std::vector<double> stub_encode(const std::string& text, int output_dim, uint64_t seed) {
    if (output_dim < 8) throw std::invalid_argument("stub_encode: output_dim must be >= 8");
    std::vector<double> acc(static_cast<size_t>(output_dim), 0.0);
    const uint64_t salt = splitmix64(seed);
    size_t tokens = 0;
    std::string tok;
    const auto flush = [&]() {
        if (tok.empty()) return;
        const uint64_t h = splitmix64(fnv1a64(tok) ^ salt);
        const size_t bucket = static_cast<size_t>((h >> 8) % static_cast<uint64_t>(output_dim));
        acc[bucket] += (h & 1) ? 1.0 : -1.0;
        ++tokens;
        tok.clear();
    };
    for (const char c : text) {
        const unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            tok += static_cast<char>(std::tolower(uc));
        } else {
            flush();
        }
    }
    flush();
    if (tokens == 0) throw std::invalid_argument("stub_encode: empty description");

    double norm = 0.0;
    for (const double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        // Signed counts cancelled exactly; fall back to a deterministic unit
        // vector so the output stays well-defined.
        acc[0] = 1.0;
        return acc;
    }
    for (double& v : acc) v /= norm;
    return acc;
}

std::string StubEncoder::name() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "stub-d%d-s%llu", dim_,
                  static_cast<unsigned long long>(seed_));
    return buf;
}

FileEncoder::FileEncoder(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("#dim=", 0) != 0)
        throw std::runtime_error("embedding file missing #dim= header: " + path);
    dim_ = std::stoi(line.substr(5));
    if (dim_ <= 0) throw std::runtime_error("embedding file has non-positive dim");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("embedding file row missing tab separator");
        std::vector<double> vec = parse_vector_csv(line.substr(tab + 1));
        if (static_cast<int>(vec.size()) != dim_)
            throw std::runtime_error("embedding row dim mismatch for key " + line.substr(0, tab));
        vectors_.emplace(line.substr(0, tab), std::move(vec));
    }
}

std::vector<double> FileEncoder::encode(const std::string& item_key, const std::string&) const {
    const auto it = vectors_.find(item_key);
    if (it == vectors_.end())
        throw std::runtime_error("no precomputed embedding for item: " + item_key);
    return it->second;
}

KnowledgeBase::KnowledgeBase(int dim, std::string encoder_tag)
    : dim_(dim), encoder_tag_(std::move(encoder_tag)) {
    if (dim_ <= 0) throw std::invalid_argument("knowledge base dim must be positive");
    zero_vec_.assign(static_cast<size_t>(dim_), 0.0);
}

const std::vector<double>& KnowledgeBase::lookup(const std::string& key) const {
    const auto it = index_.find(key);
    if (it == index_.end()) {
        if (zero_fallback_) return zero_vec_;
        throw std::out_of_range("unknown item: " + key);
    }
    return entries_[it->second].second;
}

void KnowledgeBase::insert(const std::string& key, std::vector<double> vec) {
    if (key.empty()) throw std::invalid_argument("knowledge base key must be nonempty");
    if (static_cast<int>(vec.size()) != dim_)
        throw std::invalid_argument("vector dim mismatch for key " + key);
    for (const double v : vec)
        if (!std::isfinite(v))
            throw std::invalid_argument("non-finite embedding entry for key " + key);
    if (index_.count(key)) throw std::invalid_argument("duplicate item key: " + key);
    index_.emplace(key, entries_.size());
    entries_.emplace_back(key, std::move(vec));
}

void KnowledgeBase::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write knowledge base: " + path);
    out.write(kKbMagic, 8);
    wire::write_u32(out, static_cast<uint32_t>(dim_));
    wire::write_u64(out, entries_.size());
    for (const auto& [key, vec] : entries_) {
        if (key.size() > 0xFFFF) throw std::runtime_error("item key too long: " + key);
        wire::write_u16(out, static_cast<uint16_t>(key.size()));
        out.write(key.data(), static_cast<std::streamsize>(key.size()));
        for (const double v : vec) wire::write_f64(out, v);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

KnowledgeBase KnowledgeBase::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open knowledge base: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kKbMagic, 8) != 0)
        throw std::runtime_error("bad knowledge base magic in " + path);
    const int dim = static_cast<int>(wire::read_u32(in));
    const uint64_t count = wire::read_u64(in);
    KnowledgeBase kb(dim, "loaded");
    for (uint64_t i = 0; i < count; ++i) {
        const uint16_t klen = wire::read_u16(in);
        std::string key(klen, '\0');
        in.read(key.data(), klen);
        std::vector<double> vec(static_cast<size_t>(dim));
        for (double& v : vec) v = wire::read_f64(in);
        if (!in) throw std::runtime_error("truncated knowledge base: " + path);
        kb.insert(key, std::move(vec));
    }
    return kb;
}

void KnowledgeBase::save_tsv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write knowledge base export: " + path);
    out << "#dim=" << dim_ << "\n";
    char buf[32];
    for (const auto& [key, vec] : entries_) {
        out << key << '\t';
        for (size_t i = 0; i < vec.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", vec[i]);
            if (i) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

KnowledgeBase build_kb(const std::vector<ItemRecord>& catalog, const TextEncoder& encoder,
                       const std::string& category_noun) {
    if (catalog.empty()) throw std::invalid_argument("build_kb: empty catalog");
    KnowledgeBase kb(encoder.output_dim(), encoder.name());
    for (const ItemRecord& item : catalog) {
        std::vector<double> vec =
            encoder.encode(item.item_key, render_prompt(item, category_noun));
        if (static_cast<int>(vec.size()) != encoder.output_dim())
            throw std::runtime_error("encoder dim mismatch for item " + item.item_key);
        kb.insert(item.item_key, std::move(vec));
    }
    return kb;
}

}  // namespace disco
