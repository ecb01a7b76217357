#pragma once

#include <string>
#include <utility>
#include <vector>

#include "disco/data.hpp"
#include "disco/rng.hpp"
#include "disco/tensor.hpp"

namespace disco {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// A plain MLP: linear layers with ReLU hidden activations, linear output.
struct Mlp {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    Mlp() = default;
    Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng);

    // x may be a single vector {in} or a batch {B, in}.
    Tensor forward(Graph& g, const Tensor& x) const;
    void collect(NamedParams& out, const std::string& prefix) const;
};

// Per-field embedding tables; an item/user embedding is the mean of its field
// rows. Row 0 of every table is the OOV/padding row.
class TabularEmbedder {
public:
    TabularEmbedder() = default;
    TabularEmbedder(const Vocab& vocab, int dim, Rng& rng);

    int dim() const { return dim_; }
    // Mean of the per-field rows for the given (field, value) pairs.
    Tensor embed_fields(Graph& g, const FieldValues& fields) const;
    void collect(NamedParams& out, const std::string& prefix) const;

private:
    const Vocab* vocab_ = nullptr;
    int dim_ = 0;
    std::vector<std::string> field_order_;
    std::vector<Tensor> tables_;
    const Tensor& table_for(const std::string& field) const;
};

// Dimension reducer for knowledge-base vectors: [128, 64] hidden MLP down to
// the shared embedding size d.
class SemanticReducer {
public:
    SemanticReducer(int kb_dim, int dim, Rng& rng);

    int input_dim() const { return kb_dim_; }
    int dim() const { return dim_; }
    // x: {kb_dim} or {B, kb_dim}; output {dim} or {B, dim}.
    Tensor forward(Graph& g, const Tensor& x) const;
    void collect(NamedParams& out, const std::string& prefix) const;

private:
    int kb_dim_, dim_;
    Mlp mlp_;
};

// 2 x d table for historical labels; masked history slots embed to zero rows.
class LabelEmbedder {
public:
    LabelEmbedder() = default;
    LabelEmbedder(int dim, Rng& rng);

    int dim() const { return dim_; }
    Tensor row(Graph& g, int label) const;  // {d}; label in {0,1}
    // K x d matrix: real entries are table rows, masked entries zero.
    Tensor history_matrix(Graph& g, const std::vector<std::pair<std::string, int>>& history,
                          const std::vector<uint8_t>& mask) const;
    void collect(NamedParams& out, const std::string& prefix) const;

private:
    int dim_ = 0;
    Tensor table_;
};

// The four chunk halves of a candidate item: intra-domain (first d/2 entries)
// and inter-domain (last d/2) per space.
struct ChunkedItem {
    Tensor s_intra, s_inter;  // from h^S
    Tensor t_intra, t_inter;  // from h^T
};

ChunkedItem chunk_item(Graph& g, const Tensor& h_sem, const Tensor& h_tab);

}  // namespace disco
