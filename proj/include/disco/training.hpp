#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "disco/adam.hpp"
#include "disco/model.hpp"
#include "disco/rng.hpp"

namespace disco {

// Every hyperparameter, seed, and toggle governing a run. Defaults follow the
// reference configuration: d=32, K=30, alpha=0.02, beta=0.01, patience 10.
struct TrainConfig {
    int dim = 32;
    int window = 30;
    double alpha = 0.02;
    double beta = 0.01;
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    int batch_size = 256;
    int estimator_steps_per_iter = 1;
    bool estimator_per_epoch = false;  // fit estimators once per epoch instead of per batch
    double estimator_lr = 1e-3;
    int patience = 10;
    int max_epochs = 100;
    uint64_t seed = 42;
    BackboneKind backbone = BackboneKind::kDnn;
    PatternFlags flags;
    bool use_sufficiency = true;
    bool use_disentanglement = true;
    std::vector<std::string> tabular_fields;  // empty: item_id + all catalog columns
    bool kb_zero_fallback = false;

    void validate() const;
    ModelConfig model_config() const;
};

// Mean binary cross-entropy over a batch; predictions clipped to
// [1e-7, 1 - 1e-7]. Labels outside {0, 1} are an error.
Tensor bce_loss(Graph& g, const Tensor& probs, const std::vector<int>& labels);

// L = l_pred + alpha * l_suf + beta * l_dis.
Tensor total_loss(Graph& g, const Tensor& probs, const std::vector<int>& labels,
                  const Tensor& l_suf, const Tensor& l_dis, double alpha, double beta);

struct IterationStats {
    double l_pred = 0.0, l_suf = 0.0, l_dis = 0.0, total = 0.0;
};

// Drives the alternating schedule: per iteration the vCLUB estimators fit on
// detached pattern vectors first, then the main model (with the sufficiency
// discriminators, cooperatively) takes one Adam step.
class Trainer {
public:
    Trainer(DiscoModel& model, const TrainConfig& cfg);

    IterationStats train_iteration(std::span<const SampleWindow> batch);

    struct FitResult {
        int best_epoch = 0;
        double best_auc = 0.0;
        int epochs_run = 0;
    };
    // Early-stops on validation AUC; the model is left holding the best
    // checkpoint seen. `log` (optional) receives the training TSV.
    FitResult fit(const std::vector<SampleWindow>& train,
                  const std::vector<SampleWindow>& valid, std::ostream* log);

    const AdamOptimizer& main_optimizer() const { return main_opt_; }

private:
    DiscoModel* model_;
    TrainConfig cfg_;
    AdamOptimizer main_opt_;
    AdamOptimizer est1_opt_, est2_opt_;
    Rng shuffle_rng_, pair_rng_, vclub_rng_;

    void fit_estimators(const DiscoModel::BatchOut& out);
};

}  // namespace disco
