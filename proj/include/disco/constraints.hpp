#pragma once

#include <span>
#include <utility>
#include <vector>

#include "disco/adam.hpp"
#include "disco/encoders.hpp"
#include "disco/rng.hpp"
#include "disco/tensor.hpp"

namespace disco {

// Bilinear pair scorer sigma(a^T W b + bias) with W of shape (d/2) x d.
struct BilinearDiscriminator {
    Tensor w;
    Tensor bias;

    BilinearDiscriminator() = default;
    BilinearDiscriminator(int half_dim, int dim, Rng& rng)
        : w(Tensor::xavier(half_dim, dim, rng)), bias(Tensor::zeros({1}, true)) {}
    static BilinearDiscriminator zero_init(int half_dim, int dim) {
        BilinearDiscriminator d;
        d.w = Tensor::zeros({half_dim, dim}, true);
        d.bias = Tensor::zeros({1}, true);
        return d;
    }

    Tensor score(Graph& g, const Tensor& a, const Tensor& b) const;
    // Row-wise scores for stacked pairs: anchors (P, d/2) x patterns (P, d).
    Tensor score_batch(Graph& g, const Tensor& anchors, const Tensor& patterns) const;
    void collect(NamedParams& out, const std::string& prefix) const {
        out.emplace_back(prefix + ".w", w);
        out.emplace_back(prefix + ".b", bias);
    }
};

// In-batch positive/negative pairs for one domain: (anchor, pattern) with
// matching labels in `pos` and differing labels in `neg`.
struct PairBatch {
    std::vector<Tensor> pos_anchor, pos_pattern;
    std::vector<Tensor> neg_anchor, neg_pattern;

    bool empty() const { return pos_anchor.empty() && neg_anchor.empty(); }
};

// For each anchor i, draw one positive partner j != i with y_j == y_i and one
// negative with y_j != y_i, uniformly from the batch; anchors lacking a
// partner of a kind are skipped for that kind. Returns (tabular, semantic).
std::pair<PairBatch, PairBatch> sample_pairs(std::span<const Tensor> h_tab_intra,
                                             std::span<const Tensor> h_sem_intra,
                                             std::span<const Tensor> pattern_tt,
                                             std::span<const Tensor> pattern_ss,
                                             const std::vector<int>& labels, Rng& rng);

// Jensen-Shannon style sufficiency objective, minimized jointly by the
// discriminators and the encoders (cooperative):
//   -mean log D1(pos_tab) - mean log(1 - D1(neg_tab))
//   -mean log D2(pos_sem) - mean log(1 - D2(neg_sem)),
// with log arguments clipped at 1e-7. Both domains empty yields 0 with a
// warning on stderr.
Tensor sufficiency_loss(Graph& g, const PairBatch& tabular, const PairBatch& semantic,
                        const BilinearDiscriminator& d_tab, const BilinearDiscriminator& d_sem);

// Variational Gaussian conditional q(y|x) with diagonal covariance; mean and
// log-variance are d -> [64] -> d MLPs, log-variance clamped to [-8, 8].
class VclubEstimator {
public:
    VclubEstimator() = default;
    VclubEstimator(int dim, Rng& rng);

    int dim() const { return dim_; }
    Tensor mean(Graph& g, const Tensor& x) const { return mu_.forward(g, x); }
    Tensor log_variance(Graph& g, const Tensor& x) const;

    std::vector<Tensor> params() const;
    void collect(NamedParams& out, const std::string& prefix) const {
        mu_.collect(out, prefix + ".mu");
        logvar_.collect(out, prefix + ".logvar");
    }
    // Detached copy: same values, no gradient tracking.
    VclubEstimator frozen() const;

private:
    int dim_ = 0;
    Mlp mu_, logvar_;
};

// Mean Gaussian log-likelihood of y given x under q, with the log(2*pi)
// constant dropped (it cancels in the MI estimate):
//   mean over pairs of sum_dims[ -(y - mu)^2 / (2 sigma^2) - 0.5 log sigma^2 ].
Tensor vclub_loglik(Graph& g, const Tensor& x, const Tensor& y, const VclubEstimator& q);

// Sampled vCLUB estimate: matched-pair log-likelihood minus the same under a
// seeded random permutation of y (redrawn once if it comes out the identity).
Tensor vclub_mi_estimate(Graph& g, const Tensor& x, const Tensor& y, const VclubEstimator& q,
                         Rng& rng);

// One Adam ascent step on vclub_loglik w.r.t. q's parameters only; x and y
// must be detached from the main model's graph.
void estimator_fit_step(const Tensor& x, const Tensor& y, const VclubEstimator& q,
                        AdamOptimizer& opt);

// l_Dis = vCLUB(H_TT; H_SS) + vCLUB(H_TS; H_ST), with q1 and q2 frozen so the
// gradients reach only the main model.
Tensor disentanglement_loss(Graph& g, const Tensor& h_tt, const Tensor& h_ss,
                            const Tensor& h_ts, const Tensor& h_st, const VclubEstimator& q1,
                            const VclubEstimator& q2, Rng& rng);

}  // namespace disco
