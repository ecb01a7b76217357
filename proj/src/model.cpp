#include "disco/model.hpp"

#include <stdexcept>
#include <unordered_map>

namespace disco {

void ModelConfig::validate() const {
    if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("d must be even and >= 2");
    if (window < 1) throw std::invalid_argument("K must be >= 1");
    if (use_sufficiency && !(flags.tt && flags.ss))
        throw std::invalid_argument("sufficiency constraint requires use_ptt and use_pss");
    if (use_disentanglement && !(flags.tt && flags.ss && flags.ts && flags.st))
        throw std::invalid_argument("disentanglement constraint requires all four patterns");
}

DiscoModel::DiscoModel(const ModelConfig& cfg, const Vocab& vocab, const FieldSchema& schema,
                       const Catalog& catalog, const KnowledgeBase* kb)
    : cfg_(cfg), vocab_(&vocab), schema_(schema), catalog_(&catalog), kb_(kb) {
    cfg_.validate();
    if (cfg_.flags.semantic_needed() && !kb)
        throw std::invalid_argument("semantic patterns enabled but no knowledge base given");

    Rng rng(derive_seed(cfg_.init_seed, "init"));
    tabular_ = TabularEmbedder(vocab, cfg_.dim, rng);
    if (cfg_.flags.semantic_needed())
        reducer_ = std::make_unique<SemanticReducer>(kb->dim(), cfg_.dim, rng);
    label_embedder_ = LabelEmbedder(cfg_.dim, rng);
    attn_ = DsAttnParams(cfg_.dim, rng);
    backbone_ = Backbone(cfg_.backbone, cfg_.dim,
                         static_cast<int>(schema_.context_fields.size()), rng);
    suf_disc_tab_ = BilinearDiscriminator(cfg_.dim / 2, cfg_.dim, rng);
    suf_disc_sem_ = BilinearDiscriminator(cfg_.dim / 2, cfg_.dim, rng);
    vclub1_ = VclubEstimator(cfg_.dim, rng);
    vclub2_ = VclubEstimator(cfg_.dim, rng);
}

DiscoModel::BatchOut DiscoModel::forward(Graph& g, std::span<const SampleWindow> batch) const {
    if (batch.empty()) throw std::invalid_argument("forward: empty batch");
    const int d = cfg_.dim;
    const int k = cfg_.window;
    const PatternFlags& flags = cfg_.flags;

    // Deduplicate items across targets and histories; the same item's
    // encoders run once per batch and fan out through the tape.
    std::vector<const std::string*> distinct;
    std::unordered_map<std::string, int> item_slot;
    const auto intern = [&](const std::string& key) {
        const auto [it, inserted] = item_slot.try_emplace(key, static_cast<int>(distinct.size()));
        if (inserted) distinct.push_back(&key);
        return it->second;
    };
    for (const SampleWindow& w : batch) {
        if (static_cast<int>(w.history_mask.size()) != k)
            throw std::invalid_argument("sample mask length does not match model window");
        intern(w.target.item_key);
        for (const auto& [key, label] : w.history) intern(key);
    }
    const int m = static_cast<int>(distinct.size());

    // Tabular embeddings for every distinct item, stacked (M, d).
    std::vector<Tensor> item_tab(m);
    for (int i = 0; i < m; ++i)
        item_tab[i] = tabular_.embed_fields(
            g, item_field_values(*catalog_, *distinct[i], schema_.item_fields));
    Tensor tab_stack = stack_rows(g, item_tab);
    auto tab_chunks = chunk_cols(g, tab_stack, 2);  // [intra, inter], (M, d/2)

    // Semantic embeddings through the KB + reducer, batched over items.
    Tensor sem_intra, sem_inter;
    if (flags.semantic_needed()) {
        std::vector<double> kb_data;
        kb_data.reserve(static_cast<size_t>(m) * kb_->dim());
        for (int i = 0; i < m; ++i) {
            const std::vector<double>& vec = kb_->lookup(*distinct[i]);
            kb_data.insert(kb_data.end(), vec.begin(), vec.end());
        }
        Tensor kb_stack = Tensor::constant({m, kb_->dim()}, std::move(kb_data));
        Tensor sem_stack = reducer_->forward(g, kb_stack);  // (M, d)
        auto sem_chunks = chunk_cols(g, sem_stack, 2);
        sem_intra = sem_chunks[0];
        sem_inter = sem_chunks[1];
    }

    BatchOut out;
    out.samples.reserve(batch.size());
    std::vector<Tensor> probs, htt, hss, hts, hst;
    for (const SampleWindow& w : batch) {
        const int target_slot = item_slot.at(w.target.item_key);
        std::vector<int> hist_idx(static_cast<size_t>(k), -1);
        const size_t pad = static_cast<size_t>(k) - w.history.size();
        for (size_t j = 0; j < w.history.size(); ++j)
            hist_idx[pad + j] = item_slot.at(w.history[j].first);

        SampleOut s;
        ChunkedItem candidate;
        candidate.t_intra = slice_row(g, tab_chunks[0], target_slot);
        candidate.t_inter = slice_row(g, tab_chunks[1], target_slot);
        if (flags.semantic_needed()) {
            candidate.s_intra = slice_row(g, sem_intra, target_slot);
            candidate.s_inter = slice_row(g, sem_inter, target_slot);
        }
        s.h_tab_intra = candidate.t_intra;
        s.h_sem_intra = candidate.s_intra;

        Tensor labels;
        if (flags.any())
            labels = label_embedder_.history_matrix(g, w.history, w.history_mask);

        const auto run_block = [&](const AttnParams& theta, const Tensor& query,
                                   const Tensor& key_src) {
            return attn_block(g, query, gather_rows(g, key_src, hist_idx),
                              gather_rows(g, key_src, hist_idx), labels, w.history_mask, theta);
        };
        BackboneInput in;
        if (flags.tt) {
            const AttnOut tt = run_block(attn_.tt, candidate.t_intra, tab_chunks[0]);
            s.h_tt = tt.pooled;
            const std::vector<Tensor> parts = {tt.pooled, tt.labels};
            s.p_tt = concat(g, parts);
            in.p_tt = s.p_tt;
            htt.push_back(s.h_tt);
        }
        if (flags.ss) {
            const AttnOut ss = run_block(attn_.ss, candidate.s_intra, sem_intra);
            s.h_ss = ss.pooled;
            const std::vector<Tensor> parts = {ss.pooled, ss.labels};
            s.p_ss = concat(g, parts);
            in.p_ss = s.p_ss;
            hss.push_back(s.h_ss);
        }
        if (flags.st) {
            const AttnOut st = run_block(attn_.st, candidate.s_inter, tab_chunks[1]);
            s.h_st = st.pooled;
            const std::vector<Tensor> parts = {st.pooled, st.labels};
            s.p_st = concat(g, parts);
            in.p_st = s.p_st;
            hst.push_back(s.h_st);
        }
        if (flags.ts) {
            const AttnOut ts = run_block(attn_.ts, candidate.t_inter, sem_inter);
            s.h_ts = ts.pooled;
            const std::vector<Tensor> parts = {ts.pooled, ts.labels};
            s.p_ts = concat(g, parts);
            in.p_ts = s.p_ts;
            hts.push_back(s.h_ts);
        }

        in.user_emb = tabular_.embed_fields(g, w.user_features);
        in.item_emb = item_tab[static_cast<size_t>(target_slot)];
        for (const std::string& f : schema_.context_fields) {
            FieldValues fv;
            for (const auto& [name, value] : w.context_features)
                if (name == f) fv.emplace_back(name, value);
            if (fv.empty()) fv.emplace_back(f, "");  // absent context maps to OOV
            in.context_embs.push_back(tabular_.embed_fields(g, fv));
        }
        in.history_tab = gather_rows(g, tab_stack, hist_idx);
        in.mask = &w.history_mask;

        s.prob = backbone_.forward(g, in, flags);
        probs.push_back(s.prob);
        out.labels.push_back(w.target.label);
        out.samples.push_back(std::move(s));
    }

    out.probs = concat(g, probs);
    if (flags.tt) out.h_tt = stack_rows(g, htt);
    if (flags.ss) out.h_ss = stack_rows(g, hss);
    if (flags.ts) out.h_ts = stack_rows(g, hts);
    if (flags.st) out.h_st = stack_rows(g, hst);
    return out;
}

std::vector<double> DiscoModel::predict(std::span<const SampleWindow> samples) const {
    std::vector<double> scores;
    scores.reserve(samples.size());
    // Chunked so eval memory stays bounded by the forward graph of one slab.
    const size_t slab = 512;
    for (size_t off = 0; off < samples.size(); off += slab) {
        const size_t n = std::min(slab, samples.size() - off);
        Graph g;
        const BatchOut out = forward(g, samples.subspan(off, n));
        for (size_t i = 0; i < n; ++i) scores.push_back(out.probs.at(static_cast<int>(i)));
    }
    return scores;
}

NamedParams DiscoModel::named_params() const {
    NamedParams out;
    tabular_.collect(out, "tab");
    if (reducer_) reducer_->collect(out, "reducer");
    label_embedder_.collect(out, "label");
    attn_.collect(out);
    backbone_.collect(out, "backbone");
    suf_disc_tab_.collect(out, "suf_disc_t");
    suf_disc_sem_.collect(out, "suf_disc_s");
    vclub1_.collect(out, "vclub1");
    vclub2_.collect(out, "vclub2");
    return out;
}

std::vector<Tensor> DiscoModel::main_params() const {
    std::vector<Tensor> out;
    for (const auto& [name, tensor] : named_params())
        if (name.rfind("vclub", 0) != 0) out.push_back(tensor);
    return out;
}

std::vector<Tensor> DiscoModel::estimator_params() const {
    std::vector<Tensor> out;
    for (const auto& [name, tensor] : named_params())
        if (name.rfind("vclub", 0) == 0) out.push_back(tensor);
    return out;
}

}  // namespace disco
