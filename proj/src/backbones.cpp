#include "disco/backbones.hpp"

#include <stdexcept>

namespace disco {

BackboneKind backbone_kind_from_string(const std::string& s) {
    if (s == "dnn") return BackboneKind::kDnn;
    if (s == "din") return BackboneKind::kTargetAttention;
    throw std::invalid_argument("unknown backbone '" + s + "' (expected dnn or din)");
}

std::string to_string(BackboneKind kind) {
    return kind == BackboneKind::kDnn ? "dnn" : "din";
}

Tensor assemble_input(Graph& g, const BackboneInput& in, const Tensor& pooled_history,
                      const PatternFlags& flags, int dim) {
    std::vector<Tensor> parts;
    parts.push_back(in.user_emb);
    parts.push_back(in.item_emb);
    for (const Tensor& c : in.context_embs) parts.push_back(c);
    parts.push_back(pooled_history);
    const auto pattern_slot = [&](const Tensor& p, bool enabled) {
        if (enabled && p.defined()) {
            if (p.shape() != std::vector<int>{2 * dim})
                throw std::invalid_argument("assemble_input: pattern vector has wrong dim");
            return p;
        }
        return Tensor::zeros({2 * dim});
    };
    parts.push_back(pattern_slot(in.p_tt, flags.tt));
    parts.push_back(pattern_slot(in.p_ss, flags.ss));
    parts.push_back(pattern_slot(in.p_ts, flags.ts));
    parts.push_back(pattern_slot(in.p_st, flags.st));
    return concat(g, parts);
}

Backbone::Backbone(BackboneKind kind, int dim, int n_context_fields, Rng& rng)
    : kind_(kind), dim_(dim), input_dim_((3 + n_context_fields + 8) * dim),
      head_(input_dim_, {128, 64}, 1, rng) {
    if (kind_ == BackboneKind::kTargetAttention) scorer_ = Mlp(4 * dim, {32}, 1, rng);
}

Tensor Backbone::pool_history(Graph& g, const BackboneInput& in) const {
    const std::vector<uint8_t>& mask = *in.mask;
    const int k = in.history_tab.rows();
    if (static_cast<int>(mask.size()) != k)
        throw std::invalid_argument("backbone: mask length mismatch");
    int live = 0;
    for (const uint8_t m : mask) live += m ? 1 : 0;
    if (live == 0) return Tensor::zeros({dim_});

    if (kind_ == BackboneKind::kDnn) {
        // Masked mean as a fixed weight row.
        std::vector<double> w(static_cast<size_t>(k), 0.0);
        for (int i = 0; i < k; ++i)
            if (mask[i]) w[static_cast<size_t>(i)] = 1.0 / live;
        return matmul(g, Tensor::constant({k}, std::move(w)), in.history_tab);
    }

    // Candidate-aware scoring over [cand, hist, cand - hist, cand * hist].
    Tensor cand = tile_rows(g, in.item_emb, k);
    const std::vector<Tensor> features = {cand, in.history_tab,
                                          sub(g, cand, in.history_tab),
                                          mul(g, cand, in.history_tab)};
    Tensor scores = row_sum(g, scorer_.forward(g, concat_cols(g, features)));  // {K}
    Tensor attn = softmax_row(g, scores, &mask);
    return matmul(g, attn, in.history_tab);
}

Tensor Backbone::forward(Graph& g, const BackboneInput& in, const PatternFlags& flags) const {
    if (!in.mask) throw std::invalid_argument("backbone: missing history mask");
    Tensor pooled = pool_history(g, in);
    Tensor assembled = assemble_input(g, in, pooled, flags, dim_);
    if (assembled.shape()[0] != input_dim_)
        throw std::invalid_argument("backbone input dim mismatch: expected " +
                                    std::to_string(input_dim_) + ", got " +
                                    std::to_string(assembled.shape()[0]));
    return sigmoid(g, head_.forward(g, assembled));
}

void Backbone::collect(NamedParams& out, const std::string& prefix) const {
    head_.collect(out, prefix + ".head");
    if (kind_ == BackboneKind::kTargetAttention) scorer_.collect(out, prefix + ".scorer");
}

}  // namespace disco
