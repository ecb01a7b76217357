#include "disco/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "disco/constraints.hpp"
#include "disco/eval.hpp"

namespace disco {

void TrainConfig::validate() const {
    if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("d must be even");
    if (window < 1) throw std::invalid_argument("K must be >= 1");
    if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("alpha and beta must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (estimator_steps_per_iter < 0)
        throw std::invalid_argument("estimator_steps_per_iter must be >= 0");
    if (learning_rate <= 0.0 || estimator_lr <= 0.0)
        throw std::invalid_argument("learning rates must be positive");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
}

ModelConfig TrainConfig::model_config() const {
    ModelConfig mc;
    mc.dim = dim;
    mc.window = window;
    mc.backbone = backbone;
    mc.flags = flags;
    mc.use_sufficiency = use_sufficiency;
    mc.use_disentanglement = use_disentanglement;
    mc.init_seed = seed;
    return mc;
}

Tensor bce_loss(Graph& g, const Tensor& probs, const std::vector<int>& labels) {
    if (probs.rank() != 1 || probs.size() != labels.size())
        throw std::invalid_argument("bce_loss: predictions/labels length mismatch");
    const size_t n = labels.size();
    std::vector<double> y(n), y_inv(n);
    for (size_t i = 0; i < n; ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("bce_loss: label outside {0,1}");
        y[i] = static_cast<double>(labels[i]);
        y_inv[i] = 1.0 - y[i];
    }
    const std::vector<int> shape = probs.shape();
    Tensor p = clip(g, probs, 1e-7, 1.0 - 1e-7);
    Tensor one = Tensor::constant(shape, std::vector<double>(n, 1.0));
    Tensor pos = mul(g, Tensor::constant(shape, std::move(y)), log(g, p));
    Tensor negt = mul(g, Tensor::constant(shape, std::move(y_inv)), log(g, sub(g, one, p)));
    return neg(g, mean_all(g, add(g, pos, negt)));
}

Tensor total_loss(Graph& g, const Tensor& probs, const std::vector<int>& labels,
                  const Tensor& l_suf, const Tensor& l_dis, double alpha, double beta) {
    Tensor pred = bce_loss(g, probs, labels);
    return add(g, pred, add(g, scale(g, l_suf, alpha), scale(g, l_dis, beta)));
}

Trainer::Trainer(DiscoModel& model, const TrainConfig& cfg)
    : model_(&model), cfg_(cfg),
      main_opt_(model.main_params(),
                AdamConfig{.learning_rate = cfg.learning_rate,
                           .weight_decay = cfg.weight_decay}),
      est1_opt_(model.vclub1().params(), AdamConfig{.learning_rate = cfg.estimator_lr}),
      est2_opt_(model.vclub2().params(), AdamConfig{.learning_rate = cfg.estimator_lr}),
      shuffle_rng_(derive_seed(cfg.seed, "shuffle")),
      pair_rng_(derive_seed(cfg.seed, "pairs")),
      vclub_rng_(derive_seed(cfg.seed, "vclub")) {
    cfg_.validate();
}

void Trainer::fit_estimators(const DiscoModel::BatchOut& out) {
    const Tensor x1 = out.h_tt.detach(), y1 = out.h_ss.detach();
    const Tensor x2 = out.h_ts.detach(), y2 = out.h_st.detach();
    for (int s = 0; s < cfg_.estimator_steps_per_iter; ++s) {
        estimator_fit_step(x1, y1, model_->vclub1(), est1_opt_);
        estimator_fit_step(x2, y2, model_->vclub2(), est2_opt_);
    }
}

IterationStats Trainer::train_iteration(std::span<const SampleWindow> batch) {
    if (cfg_.use_disentanglement && batch.size() < 2)
        throw std::invalid_argument(
            "train_iteration: disentanglement needs a batch of at least 2");

    Graph g;
    const DiscoModel::BatchOut out = model_->forward(g, batch);

    if (cfg_.use_disentanglement && !cfg_.estimator_per_epoch) fit_estimators(out);

    Tensor l_suf = Tensor::zeros({1});
    if (cfg_.use_sufficiency) {
        std::vector<Tensor> anchors_t, anchors_s, patt_t, patt_s;
        for (const auto& s : out.samples) {
            anchors_t.push_back(s.h_tab_intra);
            anchors_s.push_back(s.h_sem_intra);
            patt_t.push_back(s.h_tt);
            patt_s.push_back(s.h_ss);
        }
        const auto [tab_pairs, sem_pairs] =
            sample_pairs(anchors_t, anchors_s, patt_t, patt_s, out.labels, pair_rng_);
        l_suf = sufficiency_loss(g, tab_pairs, sem_pairs, model_->suf_disc_tab(),
                                 model_->suf_disc_sem());
    }

    Tensor l_dis = Tensor::zeros({1});
    if (cfg_.use_disentanglement) {
        l_dis = disentanglement_loss(g, out.h_tt, out.h_ss, out.h_ts, out.h_st,
                                     model_->vclub1(), model_->vclub2(), vclub_rng_);
    }

    Tensor l_pred = bce_loss(g, out.probs, out.labels);
    Tensor loss = add(g, l_pred,
                      add(g, scale(g, l_suf, cfg_.alpha), scale(g, l_dis, cfg_.beta)));
    g.backward(loss);
    main_opt_.step();
    main_opt_.zero_grad();

    IterationStats stats;
    stats.l_pred = l_pred.value();
    stats.l_suf = l_suf.value();
    stats.l_dis = l_dis.value();
    stats.total = loss.value();
    return stats;
}

Trainer::FitResult Trainer::fit(const std::vector<SampleWindow>& train,
                                const std::vector<SampleWindow>& valid, std::ostream* log) {
    if (train.empty() || valid.empty())
        throw std::invalid_argument("fit: empty training or validation split");

    char buf[160];
    if (log) *log << "#epoch\titer\tl_pred\tl_suf\tl_dis\ttotal\tvalid_auc\n";

    std::vector<int> valid_labels(valid.size());
    for (size_t i = 0; i < valid.size(); ++i) valid_labels[i] = valid[i].target.label;

    FitResult result;
    double best_auc = -1.0;
    int since_improve = 0;
    NamedParams params = model_->named_params();
    std::vector<std::vector<double>> best_snapshot;

    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
        shuffle_rng_.shuffle(order);
        IterationStats epoch_mean;
        int iters = 0;
        std::vector<SampleWindow> batch;
        batch.reserve(static_cast<size_t>(cfg_.batch_size));
        for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(cfg_.batch_size)) {
            const size_t take =
                std::min(static_cast<size_t>(cfg_.batch_size), order.size() - pos);
            if (take < 2 && order.size() > 1) continue;  // skip a trailing singleton
            batch.clear();
            for (size_t j = 0; j < take; ++j) batch.push_back(train[order[pos + j]]);
            const IterationStats s = train_iteration(batch);
            if (log) {
                std::snprintf(buf, sizeof(buf), "%d\t%d\t%.10g\t%.10g\t%.10g\t%.10g\t\n",
                              epoch, iters, s.l_pred, s.l_suf, s.l_dis, s.total);
                *log << buf;
            }
            epoch_mean.l_pred += s.l_pred;
            epoch_mean.l_suf += s.l_suf;
            epoch_mean.l_dis += s.l_dis;
            epoch_mean.total += s.total;
            ++iters;
        }
        if (iters == 0) throw std::runtime_error("fit: no usable batches");
        epoch_mean.l_pred /= iters;
        epoch_mean.l_suf /= iters;
        epoch_mean.l_dis /= iters;
        epoch_mean.total /= iters;

        if (cfg_.use_disentanglement && cfg_.estimator_per_epoch) {
            const size_t slab =
                std::min(train.size(), static_cast<size_t>(cfg_.batch_size));
            if (slab >= 2) {
                Graph g;
                fit_estimators(
                    model_->forward(g, std::span<const SampleWindow>(train.data(), slab)));
            }
        }

        const std::vector<double> scores = model_->predict(valid);
        const double valid_auc = auc(scores, valid_labels);
        if (log) {
            std::snprintf(buf, sizeof(buf), "%d\t-1\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\n", epoch,
                          epoch_mean.l_pred, epoch_mean.l_suf, epoch_mean.l_dis,
                          epoch_mean.total, valid_auc);
            *log << buf;
        }

        result.epochs_run = epoch;
        if (valid_auc > best_auc) {
            best_auc = valid_auc;
            result.best_epoch = epoch;
            since_improve = 0;
            best_snapshot.clear();
            for (const auto& [name, tensor] : params) best_snapshot.push_back(tensor.data());
        } else {
            ++since_improve;
            if (since_improve >= cfg_.patience) break;
        }
    }

    // Leave the model holding the best checkpoint.
    for (size_t i = 0; i < params.size(); ++i) params[i].second.data() = best_snapshot[i];
    result.best_auc = best_auc;
    return result;
}

}  // namespace disco
