#include "disco/constraints.hpp"

#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace disco {

namespace {

constexpr double kLogClip = 1e-7;

// Collect the positive/negative partner pools for one anchor and draw one of
// each, uniformly.
void draw_pairs(std::span<const Tensor> anchors, std::span<const Tensor> patterns,
                const std::vector<int>& labels, Rng& rng, PairBatch& out) {
    const int n = static_cast<int>(labels.size());
    std::vector<int> pool;
    for (int i = 0; i < n; ++i) {
        pool.clear();
        for (int j = 0; j < n; ++j)
            if (j != i && labels[j] == labels[i]) pool.push_back(j);
        if (!pool.empty()) {
            const int j = pool[rng.uniform_int(static_cast<int>(pool.size()))];
            out.pos_anchor.push_back(anchors[i]);
            out.pos_pattern.push_back(patterns[j]);
        }
        pool.clear();
        for (int j = 0; j < n; ++j)
            if (labels[j] != labels[i]) pool.push_back(j);
        if (!pool.empty()) {
            const int j = pool[rng.uniform_int(static_cast<int>(pool.size()))];
            out.neg_anchor.push_back(anchors[i]);
            out.neg_pattern.push_back(patterns[j]);
        }
    }
}

// -mean log D(...) with scores clipped away from {0, 1} so saturated
// discriminators keep both log arguments positive. `flip` scores the negative
// pairs via log(1 - D).
Tensor bce_term(Graph& g, const BilinearDiscriminator& disc, const std::vector<Tensor>& anchors,
                const std::vector<Tensor>& patterns, bool flip) {
    Tensor a = stack_rows(g, anchors);
    Tensor b = stack_rows(g, patterns);
    Tensor scores = clip(g, disc.score_batch(g, a, b), kLogClip, 1.0 - kLogClip);
    Tensor arg = flip ? sub(g, Tensor::constant(scores.shape(),
                                                std::vector<double>(scores.size(), 1.0)),
                            scores)
                      : scores;
    return neg(g, mean_all(g, log(g, arg)));
}

}  // namespace

Tensor BilinearDiscriminator::score(Graph& g, const Tensor& a, const Tensor& b) const {
    return sigmoid(g, add_scalar(g, dot(g, matmul(g, a, w), b), bias));
}

Tensor BilinearDiscriminator::score_batch(Graph& g, const Tensor& anchors,
                                          const Tensor& patterns) const {
    Tensor proj = matmul(g, anchors, w);               // (P, d)
    Tensor raw = row_sum(g, mul(g, proj, patterns));   // (P)
    return sigmoid(g, add_scalar(g, raw, bias));
}

std::pair<PairBatch, PairBatch> sample_pairs(std::span<const Tensor> h_tab_intra,
                                             std::span<const Tensor> h_sem_intra,
                                             std::span<const Tensor> pattern_tt,
                                             std::span<const Tensor> pattern_ss,
                                             const std::vector<int>& labels, Rng& rng) {
    const size_t n = labels.size();
    if (h_tab_intra.size() != n || h_sem_intra.size() != n || pattern_tt.size() != n ||
        pattern_ss.size() != n)
        throw std::invalid_argument("sample_pairs: batch arrays disagree in length");
    PairBatch tabular, semantic;
    draw_pairs(h_tab_intra, pattern_tt, labels, rng, tabular);
    draw_pairs(h_sem_intra, pattern_ss, labels, rng, semantic);
    return {std::move(tabular), std::move(semantic)};
}

Tensor sufficiency_loss(Graph& g, const PairBatch& tabular, const PairBatch& semantic,
                        const BilinearDiscriminator& d_tab, const BilinearDiscriminator& d_sem) {
    if (tabular.empty() && semantic.empty()) {
        std::fprintf(stderr, "warning: sufficiency_loss got no pairs, returning 0\n");
        return Tensor::zeros({1}, false);
    }
    std::vector<Tensor> terms;
    if (!tabular.pos_anchor.empty())
        terms.push_back(bce_term(g, d_tab, tabular.pos_anchor, tabular.pos_pattern, false));
    if (!tabular.neg_anchor.empty())
        terms.push_back(bce_term(g, d_tab, tabular.neg_anchor, tabular.neg_pattern, true));
    if (!semantic.pos_anchor.empty())
        terms.push_back(bce_term(g, d_sem, semantic.pos_anchor, semantic.pos_pattern, false));
    if (!semantic.neg_anchor.empty())
        terms.push_back(bce_term(g, d_sem, semantic.neg_anchor, semantic.neg_pattern, true));
    Tensor total = terms.front();
    for (size_t i = 1; i < terms.size(); ++i) total = add(g, total, terms[i]);
    return total;
}

VclubEstimator::VclubEstimator(int dim, Rng& rng)
    : dim_(dim), mu_(dim, {64}, dim, rng), logvar_(dim, {64}, dim, rng) {}

Tensor VclubEstimator::log_variance(Graph& g, const Tensor& x) const {
    return clip(g, logvar_.forward(g, x), -8.0, 8.0);
}

std::vector<Tensor> VclubEstimator::params() const {
    std::vector<Tensor> out;
    for (const Tensor& t : mu_.weights) out.push_back(t);
    for (const Tensor& t : mu_.biases) out.push_back(t);
    for (const Tensor& t : logvar_.weights) out.push_back(t);
    for (const Tensor& t : logvar_.biases) out.push_back(t);
    return out;
}

VclubEstimator VclubEstimator::frozen() const {
    VclubEstimator f;
    f.dim_ = dim_;
    for (const Tensor& t : mu_.weights) f.mu_.weights.push_back(t.detach());
    for (const Tensor& t : mu_.biases) f.mu_.biases.push_back(t.detach());
    for (const Tensor& t : logvar_.weights) f.logvar_.weights.push_back(t.detach());
    for (const Tensor& t : logvar_.biases) f.logvar_.biases.push_back(t.detach());
    return f;
}

Tensor vclub_loglik(Graph& g, const Tensor& x, const Tensor& y, const VclubEstimator& q) {
    if (x.rank() != 2 || y.rank() != 2 || x.rows() != y.rows() || x.cols() != q.dim() ||
        y.cols() != q.dim())
        throw std::invalid_argument("vclub_loglik: bad batch shapes");
    Tensor mu = q.mean(g, x);
    Tensor lv = q.log_variance(g, x);
    Tensor var = exp(g, lv);
    Tensor resid = sub(g, y, mu);
    Tensor term = add(g, div(g, mul(g, resid, resid), scale(g, var, 2.0)), scale(g, lv, 0.5));
    return neg(g, mean_all(g, row_sum(g, term)));
}

Tensor vclub_mi_estimate(Graph& g, const Tensor& x, const Tensor& y, const VclubEstimator& q,
                         Rng& rng) {
    if (x.rank() != 2 || x.rows() < 2)
        throw std::invalid_argument("vclub_mi_estimate: cannot form marginal pairs");
    const int n = x.rows();
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    const auto is_identity = [&]() {
        for (int i = 0; i < n; ++i)
            if (perm[i] != i) return false;
        return true;
    };
    rng.shuffle(perm);
    if (is_identity()) rng.shuffle(perm);  // redraw once; fixed points are fine

    Tensor matched = vclub_loglik(g, x, y, q);
    Tensor shuffled = vclub_loglik(g, x, gather_rows(g, y, perm), q);
    return sub(g, matched, shuffled);
}

void estimator_fit_step(const Tensor& x, const Tensor& y, const VclubEstimator& q,
                        AdamOptimizer& opt) {
    if (x.tracked() || y.tracked())
        throw std::invalid_argument("estimator_fit_step: inputs must be detached");
    Graph g;
    Tensor loss = neg(g, vclub_loglik(g, x, y, q));
    g.backward(loss);
    opt.step();
    opt.zero_grad();
}

Tensor disentanglement_loss(Graph& g, const Tensor& h_tt, const Tensor& h_ss,
                            const Tensor& h_ts, const Tensor& h_st, const VclubEstimator& q1,
                            const VclubEstimator& q2, Rng& rng) {
    const VclubEstimator f1 = q1.frozen();
    const VclubEstimator f2 = q2.frozen();
    // Sequenced explicitly: both estimates draw from the same rng stream.
    Tensor mi1 = vclub_mi_estimate(g, h_tt, h_ss, f1, rng);
    Tensor mi2 = vclub_mi_estimate(g, h_ts, h_st, f2, rng);
    return add(g, mi1, mi2);
}

}  // namespace disco
