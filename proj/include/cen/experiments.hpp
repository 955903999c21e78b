#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cen/cen_model.hpp"
#include "cen/data.hpp"
#include "cen/posthoc.hpp"
#include "cen/training.hpp"

namespace cen::experiments {

// Scripted sweeps behind `cen experiment`. Each run is deterministic per
// (condition, seed) and emits one tidy row per condition x seed.

struct XorRunConfig {
    std::size_t per_context = 60;
    std::size_t dict_size = 2;
    std::size_t hidden = 16;
    double entropy_weight = 0.0;
    TrainConfig train;

    XorRunConfig() {
        train.learning_rate = 0.01;
        train.max_epochs = 150;
        train.batch_size = 32;
        train.patience = 30;
    }
};

// Trains a CEN on the xor-context data (mixed or class-pure per spec).
CenModel train_xor_cen(const SyntheticSpec& data_spec, const XorRunConfig& cfg,
                       Batch* train_out = nullptr, Batch* test_out = nullptr);

struct DictSizeRow {
    std::size_t dict_size;
    std::uint64_t seed;
    double val_error;
    double test_error;
};
std::vector<DictSizeRow> dict_size_sweep(const std::vector<std::size_t>& sizes,
                                         const std::vector<std::uint64_t>& seeds);

struct SampleEfficiencyRow {
    double fraction;
    std::uint64_t seed;
    double cen_test_error;
    double baseline_test_error;  // MLP on c (+) x
};
std::vector<SampleEfficiencyRow> sample_efficiency_sweep(
    const std::vector<double>& fractions, const std::vector<std::uint64_t>& seeds);

std::vector<ConsistencyRow> noisy_features_sweep(const std::vector<double>& snrs,
                                                 std::uint64_t seed);
std::vector<ConsistencyRow> incomplete_features_sweep(const std::vector<double>& fractions,
                                                      std::uint64_t seed);

struct EntropyRegRow {
    double entropy_weight;
    std::uint64_t seed;
    double test_accuracy;
    double entropy;  // H(Y | theta) over the training set, nats
};
std::vector<EntropyRegRow> entropy_reg_sweep(const std::vector<double>& lambdas,
                                             const std::vector<std::uint64_t>& seeds);

struct LimeRecoveryRow {
    std::size_t point;
    double relative_error;  // ||theta_hat - theta*(c)|| / ||theta*(c)||
    double fidelity_r2;
};
std::vector<LimeRecoveryRow> lime_recovery(std::size_t num_points, std::size_t num_samples,
                                           std::uint64_t seed);

FanoReport fano_experiment(std::uint64_t seed);

// Simple MLP classifier on concatenated features, the unconstrained
// direct-to-label baseline.
struct MlpClassifier {
    MlpEncoder net;  // output layer emits class logits

    static MlpClassifier init(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                              Rng& rng);
    Vector predict(const Vector& features) const;
    double accuracy(const std::vector<Vector>& features,
                    const std::vector<std::size_t>& labels) const;
};

MlpClassifier train_mlp_classifier(const std::vector<Vector>& features,
                                   const std::vector<std::size_t>& labels, std::size_t classes,
                                   std::size_t hidden, const TrainConfig& cfg);

}  // namespace cen::experiments
