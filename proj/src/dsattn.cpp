#include "disco/dsattn.hpp"

#include <cmath>
#include <stdexcept>

namespace disco {

AttnOut attn_block(Graph& g, const Tensor& query, const Tensor& keys, const Tensor& values,
                   const Tensor& labels, const std::vector<uint8_t>& mask,
                   const AttnParams& params) {
    const int half = params.wq.rows();
    const int dim = params.wq.cols();
    if (query.rank() != 1 || query.shape()[0] != half)
        throw std::invalid_argument("attn_block: bad query shape");
    if (keys.rank() != 2 || keys.cols() != half || values.rank() != 2 ||
        values.cols() != half || keys.rows() != values.rows())
        throw std::invalid_argument("attn_block: bad key/value shape");
    if (labels.rank() != 2 || labels.cols() != dim || labels.rows() != keys.rows())
        throw std::invalid_argument("attn_block: bad label shape");
    if (static_cast<int>(mask.size()) != keys.rows())
        throw std::invalid_argument("attn_block: mask length mismatch");

    bool any_live = false;
    for (const uint8_t m : mask) any_live = any_live || m;
    if (!any_live) {
        return AttnOut{Tensor::zeros({dim}), Tensor::zeros({dim})};
    }

    Tensor q_proj = matmul(g, query, params.wq);   // {d}
    Tensor k_proj = matmul(g, keys, params.wk);    // {K, d}
    Tensor v_proj = matmul(g, values, params.wv);  // {K, d}
    Tensor scores = scale(g, matmul(g, k_proj, q_proj), 1.0 / std::sqrt(dim));  // {K}
    Tensor attn = softmax_row(g, scores, &mask);
    return AttnOut{matmul(g, attn, v_proj), matmul(g, attn, labels)};
}

std::pair<AttnOut, AttnOut> intra_patterns(Graph& g, const ChunkedItem& candidate,
                                           const HistoryChunks& history, const Tensor& labels,
                                           const std::vector<uint8_t>& mask,
                                           const AttnParams& theta_ss,
                                           const AttnParams& theta_tt) {
    AttnOut ss =
        attn_block(g, candidate.s_intra, history.s_intra, history.s_intra, labels, mask, theta_ss);
    AttnOut tt =
        attn_block(g, candidate.t_intra, history.t_intra, history.t_intra, labels, mask, theta_tt);
    return {ss, tt};
}

std::pair<AttnOut, AttnOut> inter_patterns(Graph& g, const ChunkedItem& candidate,
                                           const HistoryChunks& history, const Tensor& labels,
                                           const std::vector<uint8_t>& mask,
                                           const AttnParams& theta_st,
                                           const AttnParams& theta_ts) {
    AttnOut st =
        attn_block(g, candidate.s_inter, history.t_inter, history.t_inter, labels, mask, theta_st);
    AttnOut ts =
        attn_block(g, candidate.t_inter, history.s_inter, history.s_inter, labels, mask, theta_ts);
    return {st, ts};
}

PatternVectors dsattn_forward(Graph& g, const ChunkedItem& candidate,
                              const HistoryChunks& history, const Tensor& labels,
                              const std::vector<uint8_t>& mask, const DsAttnParams& params) {
    PatternVectors pv;
    auto [ss, tt] = intra_patterns(g, candidate, history, labels, mask, params.ss, params.tt);
    auto [st, ts] = inter_patterns(g, candidate, history, labels, mask, params.st, params.ts);
    pv.ss = ss;
    pv.tt = tt;
    pv.st = st;
    pv.ts = ts;
    const auto cat = [&](const AttnOut& o) {
        const std::vector<Tensor> parts = {o.pooled, o.labels};
        return concat(g, parts);
    };
    pv.p_ss = cat(ss);
    pv.p_tt = cat(tt);
    pv.p_st = cat(st);
    pv.p_ts = cat(ts);
    return pv;
}

}  // namespace disco
