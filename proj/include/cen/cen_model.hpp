#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cen/encoders.hpp"
#include "cen/explanations.hpp"
#include "cen/linalg.hpp"
#include "cen/rng.hpp"

namespace cen {

enum class Family { Linear, SurvivalCrf };
enum class EncoderKind { Mlp, Recurrent };

struct RegConfig {
    double l1_theta = 0.0;
    double l2_theta = 0.0;
    double l1_dict = 0.0;
    double l2_dict = 0.0;
    double entropy_weight = 0.0;  // lambda_H
    double c2_smooth = 0.0;       // survival only: sum_t ||theta^{t+1} - theta^t||^2
};

struct Batch {
    std::vector<Vector> contexts;
    std::vector<Vector> attrs;
    std::vector<std::size_t> labels;                 // linear family
    std::vector<SurvivalTarget> survival_targets;    // survival family

    std::size_t size() const { return contexts.size(); }
    Batch slice(const std::vector<std::size_t>& idx) const;
};

// Encoder + optional dictionary + explanation family.
//
// Constrained mode (dictionary present): encoder emits K attention logits,
// theta = softmax(logits)^T D. Unconstrained mode: encoder emits theta directly.
// Survival with an MLP encoder generates all of theta^{1:m} at once (atoms are
// m*d wide); with a recurrent encoder each step emits its own attention over
// d-wide atoms.
class CenModel {
public:
    Family family = Family::Linear;
    EncoderKind encoder_kind = EncoderKind::Mlp;
    MlpEncoder mlp;
    RecurrentEncoder rnn;
    std::optional<Matrix> dictionary;  // K x atom_dim
    std::size_t num_classes = 2;       // linear family
    std::size_t intervals = 1;         // survival family (m)
    std::size_t attr_dim = 0;          // d_x
    RegConfig reg;

    static CenModel make_linear(std::size_t context_dim, std::size_t attr_dim,
                                std::size_t num_classes, std::size_t dict_size,
                                const std::vector<std::size_t>& hidden, Rng& rng,
                                RegConfig reg = {});
    static CenModel make_linear_unconstrained(std::size_t context_dim, std::size_t attr_dim,
                                              std::size_t num_classes,
                                              const std::vector<std::size_t>& hidden, Rng& rng,
                                              RegConfig reg = {});
    static CenModel make_survival_mlp(std::size_t context_dim, std::size_t attr_dim,
                                      std::size_t intervals, std::size_t dict_size,
                                      const std::vector<std::size_t>& hidden, Rng& rng,
                                      RegConfig reg = {});
    static CenModel make_survival_recurrent(std::size_t context_dim, std::size_t attr_dim,
                                            std::size_t intervals, std::size_t dict_size,
                                            std::size_t hidden, Rng& rng, RegConfig reg = {});

    // Flattened explanation parameter count p.
    std::size_t theta_dim() const;
    std::size_t dict_atoms() const { return dictionary ? dictionary->rows() : 0; }

    // Flat trainable vector: encoder parameters, then dictionary row-major.
    std::size_t param_count() const;
    Vector get_params() const;
    void set_params(const Vector& flat);

    LinearExplanation linear_explanation(const Vector& theta) const;
    SurvivalExplanation survival_explanation(const Vector& theta) const;

private:
    void check_shapes() const;
};

struct CenForward {
    Vector prediction;           // class probabilities / outcome probabilities
    Vector theta;                // flattened explanation parameters
    Vector alpha;                // attention (empty in unconstrained mode)
    std::vector<Vector> alphas;  // per-step attention (recurrent encoder)
};

CenForward cen_forward(const CenModel& model, const Vector& c, const Vector& x);

struct LossResult {
    double loss = 0.0;
    Vector grad;  // aligned with CenModel::get_params()
};

// Mean NLL over the batch plus L1/L2 posterior penalties (and C2 smoothness
// for the survival family). Throws DivergedTraining on non-finite loss.
LossResult cen_nll(const CenModel& model, const Batch& batch, bool train_mode = false,
                   Rng* rng = nullptr);

// Batch estimate of H(Y | theta) in nats; linear family only, |B| >= 2.
double entropy_estimate(const CenModel& model, const Batch& batch);
LossResult entropy_estimate_grad(const CenModel& model, const Batch& batch);

// cen_nll - lambda_H * entropy_estimate, gradients through both terms.
LossResult cen_regularized_loss(const CenModel& model, const Batch& batch,
                                bool train_mode = false, Rng* rng = nullptr);

// Mixture-of-experts objective: -log sum_k alpha_k(c) p(y | x, theta_k).
// Requires a dictionary and the linear family.
LossResult moe_nll(const CenModel& model, const Batch& batch, bool train_mode = false,
                   Rng* rng = nullptr);

struct FanoReport {
    double epsilon_hat = 0.0;  // 1 - mean accuracy
    double delta_hat = 0.0;    // plug-in entropy estimate (nats); heuristic, not a bound
    double bound = 0.0;        // (delta - 1)/log|Y| - epsilon
    double contribution = 0.0; // acc(full model) - acc(theta-alone majority vote)
    double acc_full = 0.0;
    double acc_theta_only = 0.0;
    bool holds = false;
};

FanoReport fano_diagnostic(const CenModel& model, const Batch& dataset, Rng& rng);

}  // namespace cen
