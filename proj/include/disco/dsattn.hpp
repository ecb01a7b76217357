#pragma once

#include <utility>
#include <vector>

#include "disco/encoders.hpp"
#include "disco/tensor.hpp"

namespace disco {

// One attention block's trainable weights; W_Q, W_K, W_V are all (d/2) x d.
struct AttnParams {
    Tensor wq, wk, wv;

    AttnParams() = default;
    AttnParams(int half_dim, int dim, Rng& rng)
        : wq(Tensor::xavier(half_dim, dim, rng)),
          wk(Tensor::xavier(half_dim, dim, rng)),
          wv(Tensor::xavier(half_dim, dim, rng)) {}
    void collect(NamedParams& out, const std::string& prefix) const {
        out.emplace_back(prefix + ".wq", wq);
        out.emplace_back(prefix + ".wk", wk);
        out.emplace_back(prefix + ".wv", wv);
    }
};

// Attention block output: pooled value rows H and pooled label rows L',
// each of dim d.
struct AttnOut {
    Tensor pooled;  // H
    Tensor labels;  // L'
};

// H = A V', L' = A L with A = softmax(Q' K'^T / sqrt(d)) over unmasked keys.
// A fully masked history returns zero vectors (the cold-start convention).
AttnOut attn_block(Graph& g, const Tensor& query, const Tensor& keys, const Tensor& values,
                   const Tensor& labels, const std::vector<uint8_t>& mask,
                   const AttnParams& params);

// The four independent blocks of the dual-side attentive network.
struct DsAttnParams {
    AttnParams ss, tt, st, ts;

    DsAttnParams() = default;
    DsAttnParams(int dim, Rng& rng)
        : ss(dim / 2, dim, rng), tt(dim / 2, dim, rng), st(dim / 2, dim, rng),
          ts(dim / 2, dim, rng) {}
    void collect(NamedParams& out) const {
        ss.collect(out, "attn_ss");
        tt.collect(out, "attn_tt");
        st.collect(out, "attn_st");
        ts.collect(out, "attn_ts");
    }
};

// Chunk halves of the history window, stacked K x (d/2) with zero rows at
// masked slots.
struct HistoryChunks {
    Tensor s_intra, s_inter, t_intra, t_inter;
};

// The four pattern vectors of one sample. p_* = [H, L'] of dim 2d; the parts
// stay individually retrievable for the constraints.
struct PatternVectors {
    AttnOut tt, ss, ts, st;
    Tensor p_tt, p_ss, p_ts, p_st;
};

// Intra-domain: each space's intra chunks attend within themselves.
std::pair<AttnOut, AttnOut> intra_patterns(Graph& g, const ChunkedItem& candidate,
                                           const HistoryChunks& history, const Tensor& labels,
                                           const std::vector<uint8_t>& mask,
                                           const AttnParams& theta_ss,
                                           const AttnParams& theta_tt);

// Inter-domain: query-key exchange between the spaces' inter chunks.
std::pair<AttnOut, AttnOut> inter_patterns(Graph& g, const ChunkedItem& candidate,
                                           const HistoryChunks& history, const Tensor& labels,
                                           const std::vector<uint8_t>& mask,
                                           const AttnParams& theta_st,
                                           const AttnParams& theta_ts);

PatternVectors dsattn_forward(Graph& g, const ChunkedItem& candidate,
                              const HistoryChunks& history, const Tensor& labels,
                              const std::vector<uint8_t>& mask, const DsAttnParams& params);

}  // namespace disco
