#pragma once

#include <memory>
#include <span>
#include <vector>

#include "disco/backbones.hpp"
#include "disco/constraints.hpp"
#include "disco/data.hpp"
#include "disco/dsattn.hpp"
#include "disco/encoders.hpp"
#include "disco/semkb.hpp"

namespace disco {

struct ModelConfig {
    int dim = 32;     // shared embedding size d (even)
    int window = 30;  // behavior window K
    BackboneKind backbone = BackboneKind::kDnn;
    PatternFlags flags;
    bool use_sufficiency = true;
    bool use_disentanglement = true;
    uint64_t init_seed = 42;

    void validate() const;
};

// The full DisCo model: shared tabular/semantic/label encoders, the four
// attention blocks, the backbone, the sufficiency discriminators, and the two
// vCLUB estimators. The estimators own a separate optimizer (see training);
// everything else belongs to the main parameter group.
class DiscoModel {
public:
    DiscoModel(const ModelConfig& cfg, const Vocab& vocab, const FieldSchema& schema,
               const Catalog& catalog, const KnowledgeBase* kb);

    struct SampleOut {
        Tensor prob;                       // {1}
        Tensor h_tab_intra, h_sem_intra;   // candidate chunks {d/2}
        Tensor h_tt, h_ss, h_ts, h_st;     // pattern H parts {d} (when computed)
        Tensor p_tt, p_ss, p_ts, p_st;     // [H, L'] {2d} (when computed)
    };
    struct BatchOut {
        std::vector<SampleOut> samples;
        Tensor probs;                   // {B}
        Tensor h_tt, h_ss, h_ts, h_st;  // stacked {B, d} (when computed)
        std::vector<int> labels;
    };

    BatchOut forward(Graph& g, std::span<const SampleWindow> batch) const;

    // Evaluation-only scores (forward pass, graph discarded).
    std::vector<double> predict(std::span<const SampleWindow> samples) const;

    NamedParams named_params() const;          // every trainable tensor, fixed order
    std::vector<Tensor> main_params() const;   // all but the vCLUB estimators
    std::vector<Tensor> estimator_params() const;

    const ModelConfig& config() const { return cfg_; }
    const VclubEstimator& vclub1() const { return vclub1_; }
    const VclubEstimator& vclub2() const { return vclub2_; }
    const BilinearDiscriminator& suf_disc_tab() const { return suf_disc_tab_; }
    const BilinearDiscriminator& suf_disc_sem() const { return suf_disc_sem_; }

private:
    ModelConfig cfg_;
    const Vocab* vocab_;
    FieldSchema schema_;
    const Catalog* catalog_;
    const KnowledgeBase* kb_;

    TabularEmbedder tabular_;
    std::unique_ptr<SemanticReducer> reducer_;  // only when the semantic side is active
    LabelEmbedder label_embedder_;
    DsAttnParams attn_;
    Backbone backbone_;
    BilinearDiscriminator suf_disc_tab_, suf_disc_sem_;
    VclubEstimator vclub1_, vclub2_;
};

}  // namespace disco
