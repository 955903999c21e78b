#include "cen/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cen/kernels.hpp"
#include "cen/numeric.hpp"

namespace cen {

Optimizer::Optimizer(OptimizerTag tag, const TrainConfig& cfg, std::size_t dim)
    : tag_(tag), cfg_(cfg) {
    if (tag_ == OptimizerTag::Adam) {
        m_.assign(dim, 0.0);
        v_.assign(dim, 0.0);
        if (cfg_.amsgrad) vhat_.assign(dim, 0.0);
    } else {
        m_.assign(dim, 0.0);  // momentum buffer
    }
}

void Optimizer::step(Vector& params, const Vector& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw InvalidInput("Optimizer::step: dimension mismatch");
    }
    ++t_;
    const double lr = cfg_.learning_rate;
    if (tag_ == OptimizerTag::SgdMomentum) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.momentum * m_[i] + grad[i];
            params[i] -= lr * m_[i];
        }
        return;
    }
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
        v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
        double vh = v_[i] / bc2;
        if (cfg_.amsgrad) {
            vhat_[i] = std::max(vhat_[i], vh);
            vh = vhat_[i];
        }
        params[i] -= lr * (m_[i] / bc1) / (std::sqrt(vh) + cfg_.adam_eps);
    }
}

double evaluate_loss(const CenModel& model, const Batch& batch) {
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CenForward f = cen_forward(model, batch.contexts[i], batch.attrs[i]);
        if (model.family == Family::Linear) {
            loss -= inv_n * std::log(std::max(f.prediction[batch.labels[i]], 1e-300));
        } else {
            const auto& t = batch.survival_targets[i];
            SurvivalExplanation exp = model.survival_explanation(f.theta);
            if (t.censored) {
                loss -= inv_n * survival_censored_logprob(exp, batch.attrs[i], t.interval);
            } else {
                loss -= inv_n * survival_log_probs(exp, batch.attrs[i])[t.interval];
            }
        }
    }
    return loss;
}

double evaluate_accuracy(const CenModel& model, const Batch& batch) {
    if (model.family != Family::Linear) {
        throw InvalidInput("evaluate_accuracy: linear family only");
    }
    std::size_t ok = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CenForward f = cen_forward(model, batch.contexts[i], batch.attrs[i]);
        auto pred = static_cast<std::size_t>(
            std::max_element(f.prediction.begin(), f.prediction.end()) - f.prediction.begin());
        if (pred == batch.labels[i]) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(batch.size());
}

TrainResult train(CenModel& model, const Batch& train_set, const Batch& val_set,
                  const TrainConfig& cfg) {
    if (cfg.learning_rate < 0.0 || cfg.batch_size == 0 || cfg.max_epochs == 0) {
        throw InvalidInput("train: invalid config");
    }
    Rng rng(cfg.seed);

    Batch tr = train_set, va = val_set;
    if (va.size() == 0) {
        // seeded shuffle split
        std::vector<std::size_t> order(train_set.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
        const std::size_t n_val = std::max<std::size_t>(
            1, static_cast<std::size_t>(cfg.validation_fraction * order.size()));
        std::vector<std::size_t> vi(order.begin(), order.begin() + n_val);
        std::vector<std::size_t> ti(order.begin() + n_val, order.end());
        va = train_set.slice(vi);
        tr = train_set.slice(ti);
    }

    Optimizer opt(cfg.optimizer, cfg, model.param_count());
    Vector params = model.get_params();
    Vector best_params = params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0, since_best = 0;

    TrainResult result;
    std::vector<std::size_t> order(tr.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
            Batch mb = tr.slice(idx);
            model.set_params(params);
            LossResult lr = cfg.use_entropy_reg && mb.size() >= 2
                                ? cen_regularized_loss(model, mb, true, &rng)
                                : cen_nll(model, mb, true, &rng);
            opt.step(params, lr.grad);
            epoch_loss += lr.loss;
            ++n_batches;
        }
        model.set_params(params);
        epoch_loss /= static_cast<double>(std::max<std::size_t>(1, n_batches));

        const double val_loss = evaluate_loss(model, va);
        double val_acc = std::numeric_limits<double>::quiet_NaN();
        double entropy = std::numeric_limits<double>::quiet_NaN();
        if (model.family == Family::Linear) {
            val_acc = evaluate_accuracy(model, va);
            if (cfg.use_entropy_reg && va.size() >= 2) entropy = entropy_estimate(model, va);
        }
        result.history.push_back({epoch, epoch_loss, val_loss, val_acc, entropy});
        if (!std::isfinite(epoch_loss) || !std::isfinite(val_loss)) {
            model.set_params(best_params);
            throw DivergedTraining("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        if (val_loss < best_val) {
            best_val = val_loss;
            best_params = params;
            best_epoch = epoch;
            since_best = 0;
        } else if (++since_best > cfg.patience) {
            break;
        }
    }
    model.set_params(best_params);
    result.best_val_loss = best_val;
    result.best_epoch = best_epoch;
    return result;
}

double accuracy(const std::vector<std::size_t>& preds, const std::vector<std::size_t>& targets) {
    if (preds.size() != targets.size() || preds.empty()) {
        throw InvalidInput("accuracy: size mismatch or empty");
    }
    std::size_t ok = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) ok += preds[i] == targets[i];
    return static_cast<double>(ok) / static_cast<double>(preds.size());
}

double auc(const std::vector<double>& scores, const std::vector<std::size_t>& targets) {
    if (scores.size() != targets.size() || scores.empty()) {
        throw InvalidInput("auc: size mismatch or empty");
    }
    std::size_t n_pos = 0;
    for (std::size_t t : targets) {
        if (t > 1) throw InvalidInput("auc: targets must be binary");
        n_pos += t;
    }
    const std::size_t n_neg = targets.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("auc: needs both classes present");

    // midranks give ties half credit
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (targets[order[k]] == 1) rank_sum_pos += midrank;
        }
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

SurvivalEval survival_eval(const CenModel& model, const Batch& batch) {
    if (model.family != Family::SurvivalCrf) {
        throw InvalidInput("survival_eval: survival family only");
    }
    SurvivalEval ev;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CenForward f = cen_forward(model, batch.contexts[i], batch.attrs[i]);
        SurvivalExplanation exp = model.survival_explanation(f.theta);
        ev.curves.push_back(survival_curve(exp, batch.attrs[i]));
        ev.predicted.push_back(predicted_time(exp, batch.attrs[i]));
    }
    return ev;
}

std::vector<double> acc_at_quantiles(const std::vector<Vector>& curves,
                                     const std::vector<SurvivalTarget>& targets,
                                     const std::vector<SurvivalTarget>& train_targets,
                                     const std::vector<double>& quantiles) {
    if (curves.size() != targets.size() || curves.empty()) {
        throw InvalidInput("acc_at_quantiles: size mismatch or empty");
    }
    // observed end intervals (event or censoring time) from the training split
    std::vector<double> ends;
    ends.reserve(train_targets.size());
    for (const auto& t : train_targets) ends.push_back(static_cast<double>(t.interval));
    std::sort(ends.begin(), ends.end());

    std::vector<double> out;
    for (double q : quantiles) {
        const std::size_t pos = std::min(
            ends.size() - 1, static_cast<std::size_t>(q * static_cast<double>(ends.size())));
        const std::size_t t_q = static_cast<std::size_t>(ends[pos]);
        std::size_t ok = 0, included = 0;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            bool truth_alive;
            if (!targets[i].censored) {
                truth_alive = targets[i].interval >= t_q;
            } else if (targets[i].interval >= t_q) {
                truth_alive = true;  // censored later than t_q: known alive at t_q
            } else {
                continue;  // status unknown at t_q
            }
            ++included;
            const bool pred_alive = curves[i][t_q] >= 0.5;
            if (pred_alive == truth_alive) ++ok;
        }
        if (included == 0) throw UndefinedMetric("acc_at_quantiles: no patient has known status");
        out.push_back(static_cast<double>(ok) / static_cast<double>(included));
    }
    return out;
}

double rae(const std::vector<std::size_t>& predicted, const std::vector<SurvivalTarget>& targets) {
    if (predicted.size() != targets.size() || predicted.empty()) {
        throw InvalidInput("rae: size mismatch or empty");
    }
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i].censored) continue;
        // interval midpoints in units of the interval width; eps = one width
        const double t_pred = static_cast<double>(predicted[i]) + 0.5;
        const double t_true = static_cast<double>(targets[i].interval) + 0.5;
        total += std::min(1.0, std::fabs(t_pred - t_true) / std::max(t_true, 1.0));
        ++n;
    }
    if (n == 0) throw UndefinedMetric("rae: all targets censored");
    return total / static_cast<double>(n);
}

}  // namespace cen
