#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cen/cen_model.hpp"
#include "cen/linalg.hpp"
#include "cen/rng.hpp"

namespace cen {

enum class OptimizerTag { SgdMomentum, Adam };

struct TrainConfig {
    OptimizerTag optimizer = OptimizerTag::Adam;
    double learning_rate = 1e-3;
    double momentum = 0.9;          // sgd-momentum only
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    bool amsgrad = false;           // max-hat variant of Adam
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    std::size_t patience = 20;      // early-stop patience in epochs
    std::uint64_t seed = 0;
    double validation_fraction = 0.2;  // used when no explicit split is given
    bool use_entropy_reg = false;      // optimize cen_regularized_loss instead of cen_nll
};

// First-order optimizer over a flat parameter vector.
class Optimizer {
public:
    Optimizer(OptimizerTag tag, const TrainConfig& cfg, std::size_t dim);
    void step(Vector& params, const Vector& grad);

private:
    OptimizerTag tag_;
    TrainConfig cfg_;
    Vector m_, v_, vhat_;
    std::size_t t_ = 0;
};

struct EpochRow {
    std::size_t epoch;
    double train_loss;
    double val_loss;
    double val_acc;     // NaN for survival family
    double entropy;     // NaN when not tracked
};

struct TrainResult {
    std::vector<EpochRow> history;
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0;
};

// Mini-batch training with seeded shuffling and best-validation restore.
// If `val` is empty, a validation split is carved from `train` by seed.
TrainResult train(CenModel& model, const Batch& train, const Batch& val, const TrainConfig& cfg);

// Loss and hard-prediction accuracy of the model on a batch (no penalties).
double evaluate_loss(const CenModel& model, const Batch& batch);
double evaluate_accuracy(const CenModel& model, const Batch& batch);

// ---- metrics ----

double accuracy(const std::vector<std::size_t>& preds, const std::vector<std::size_t>& targets);

// Mann-Whitney AUC; ties get half credit. Throws UndefinedMetric if one class absent.
double auc(const std::vector<double>& scores, const std::vector<std::size_t>& targets);

struct SurvivalEval {
    std::vector<Vector> curves;               // per patient S(t_j), j = 0..m
    std::vector<std::size_t> predicted;       // predicted interval (median rule)
};

SurvivalEval survival_eval(const CenModel& model, const Batch& batch);

// Accuracy of the alive/dead call at population quantile times. Quantile
// times are empirical quantiles of observed end intervals in `train_targets`
// (censored or not). Patients with unknown status at a quantile are excluded.
std::vector<double> acc_at_quantiles(const std::vector<Vector>& curves,
                                     const std::vector<SurvivalTarget>& targets,
                                     const std::vector<SurvivalTarget>& train_targets,
                                     const std::vector<double>& quantiles = {0.25, 0.5, 0.75});

// Mean over non-censored patients of min(1, |t_pred - t_true| / max(t_true, eps)),
// midpoint convention, eps = one interval width.
double rae(const std::vector<std::size_t>& predicted, const std::vector<SurvivalTarget>& targets);

struct MetricsReport {
    double accuracy = -1.0;
    double auc = -1.0;
    std::vector<double> acc_quantiles;
    double rae = -1.0;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;
    double entropy = -1.0;
};

}  // namespace cen
