#pragma once

#include <string>
#include <vector>

#include "disco/encoders.hpp"
#include "disco/tensor.hpp"

namespace disco {

enum class BackboneKind { kDnn, kTargetAttention };

BackboneKind backbone_kind_from_string(const std::string& s);
std::string to_string(BackboneKind kind);

struct PatternFlags {
    bool tt = true, ss = true, ts = true, st = true;

    bool any() const { return tt || ss || ts || st; }
    bool semantic_needed() const { return ss || ts || st; }
};

// Everything a backbone consumes for one sample. Undefined or disabled
// pattern slots are zero-filled at assembly so the input width never changes
// across ablations.
struct BackboneInput {
    Tensor user_emb;                   // {d}
    Tensor item_emb;                   // {d} candidate
    std::vector<Tensor> context_embs;  // {d} each; usually empty
    Tensor history_tab;                // {K, d}, zero rows at masked slots
    const std::vector<uint8_t>* mask = nullptr;
    Tensor p_tt, p_ss, p_ts, p_st;     // {2d} each
};

// Fixed concatenation order:
//   [user | item | context... | pooled history | P_TT | P_SS | P_TS | P_ST].
Tensor assemble_input(Graph& g, const BackboneInput& in, const Tensor& pooled_history,
                      const PatternFlags& flags, int dim);

// Two representative backbones behind one interface: a plain MLP over the
// assembled input (history = masked mean), and a DIN-style variant that pools
// history by candidate-aware attention before the same MLP head.
class Backbone {
public:
    Backbone() = default;
    Backbone(BackboneKind kind, int dim, int n_context_fields, Rng& rng);

    BackboneKind kind() const { return kind_; }
    int input_dim() const { return input_dim_; }
    // Click probability in (0, 1).
    Tensor forward(Graph& g, const BackboneInput& in, const PatternFlags& flags) const;
    void collect(NamedParams& out, const std::string& prefix) const;

private:
    BackboneKind kind_ = BackboneKind::kDnn;
    int dim_ = 0;
    int input_dim_ = 0;
    Mlp head_;    // input_dim -> [128, 64] -> 1
    Mlp scorer_;  // target attention only: 4d -> [32] -> 1

    Tensor pool_history(Graph& g, const BackboneInput& in) const;
};

}  // namespace disco
