#include "disco/encoders.hpp"

#include <stdexcept>

namespace disco {

Mlp::Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng) {
    int in = input_dim;
    for (const int h : hidden) {
        weights.push_back(Tensor::xavier(in, h, rng));
        biases.push_back(Tensor::zeros({h}, true));
        in = h;
    }
    weights.push_back(Tensor::xavier(in, output_dim, rng));
    biases.push_back(Tensor::zeros({output_dim}, true));
}

Tensor Mlp::forward(Graph& g, const Tensor& x) const {
    Tensor h = x;
    for (size_t layer = 0; layer < weights.size(); ++layer) {
        Tensor z = matmul(g, h, weights[layer]);
        z = z.rank() == 2 ? add_rows(g, z, biases[layer]) : add(g, z, biases[layer]);
        h = layer + 1 < weights.size() ? relu(g, z) : z;
    }
    return h;
}

void Mlp::collect(NamedParams& out, const std::string& prefix) const {
    for (size_t i = 0; i < weights.size(); ++i) {
        out.emplace_back(prefix + ".w" + std::to_string(i + 1), weights[i]);
        out.emplace_back(prefix + ".b" + std::to_string(i + 1), biases[i]);
    }
}

TabularEmbedder::TabularEmbedder(const Vocab& vocab, int dim, Rng& rng)
    : vocab_(&vocab), dim_(dim) {
    if (dim < 2 || dim % 2 != 0)
        throw std::invalid_argument("embedding dim must be even and >= 2");
    for (const std::string& field : vocab.fields()) {
        field_order_.push_back(field);
        tables_.push_back(Tensor::xavier(vocab.field_size(field), dim, rng));
    }
}

const Tensor& TabularEmbedder::table_for(const std::string& field) const {
    for (size_t i = 0; i < field_order_.size(); ++i)
        if (field_order_[i] == field) return tables_[i];
    throw std::out_of_range("no embedding table for field: " + field);
}

Tensor TabularEmbedder::embed_fields(Graph& g, const FieldValues& fields) const {
    if (fields.empty()) throw std::invalid_argument("embed_fields: no fields");
    std::vector<Tensor> rows;
    rows.reserve(fields.size());
    for (const auto& [field, value] : fields) {
        const int idx = vocab_->index_of(field, value);
        rows.push_back(slice_row(g, gather_rows(g, table_for(field), {idx}), 0));
    }
    return average(g, rows);
}

void TabularEmbedder::collect(NamedParams& out, const std::string& prefix) const {
    for (size_t i = 0; i < field_order_.size(); ++i)
        out.emplace_back(prefix + "." + field_order_[i] + ".table", tables_[i]);
}

SemanticReducer::SemanticReducer(int kb_dim, int dim, Rng& rng)
    : kb_dim_(kb_dim), dim_(dim), mlp_(kb_dim, {128, 64}, dim, rng) {}

Tensor SemanticReducer::forward(Graph& g, const Tensor& x) const {
    const int in = x.rank() == 2 ? x.cols() : x.shape()[0];
    if (in != kb_dim_)
        throw std::invalid_argument("semantic reducer: input dim " + std::to_string(in) +
                                    " != kb dim " + std::to_string(kb_dim_));
    return mlp_.forward(g, x);
}

void SemanticReducer::collect(NamedParams& out, const std::string& prefix) const {
    mlp_.collect(out, prefix);
}

LabelEmbedder::LabelEmbedder(int dim, Rng& rng) : dim_(dim), table_(Tensor::xavier(2, dim, rng)) {}

Tensor LabelEmbedder::row(Graph& g, int label) const {
    if (label != 0 && label != 1)
        throw std::invalid_argument("label embedder: label must be 0 or 1");
    return slice_row(g, gather_rows(g, table_, {label}), 0);
}

Tensor LabelEmbedder::history_matrix(Graph& g,
                                     const std::vector<std::pair<std::string, int>>& history,
                                     const std::vector<uint8_t>& mask) const {
    const size_t k = mask.size();
    std::vector<int> idx(k, -1);
    const size_t pad = k - history.size();
    for (size_t j = 0; j < history.size(); ++j) {
        const int label = history[j].second;
        if (label != 0 && label != 1)
            throw std::invalid_argument("label embedder: label must be 0 or 1");
        if (!mask[pad + j]) throw std::invalid_argument("history/mask misalignment");
        idx[pad + j] = label;
    }
    return gather_rows(g, table_, idx);
}

void LabelEmbedder::collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".table", table_);
}

ChunkedItem chunk_item(Graph& g, const Tensor& h_sem, const Tensor& h_tab) {
    if (h_sem.rank() != 1 || h_tab.rank() != 1 || h_sem.size() != h_tab.size())
        throw std::invalid_argument("chunk_item: embeddings must be equal-length vectors");
    if (h_sem.size() % 2 != 0)
        throw std::invalid_argument("chunk_item: embedding dim must be even");
    auto s = chunk(g, h_sem, 2);
    auto t = chunk(g, h_tab, 2);
    return ChunkedItem{s[0], s[1], t[0], t[1]};
}

}  // namespace disco
