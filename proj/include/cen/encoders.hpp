#pragma once

#include <cstddef>
#include <vector>

#include "cen/linalg.hpp"
#include "cen/rng.hpp"

namespace cen {

// Feed-forward context encoder: ReLU hidden layers, linear output.
// Parameters flatten layer by layer, each weight matrix row-major then bias.
class MlpEncoder {
public:
    MlpEncoder() = default;

    // dims = {input, hidden..., output}. Weights ~ U(-s, s), s = sqrt(6/(fan_in+fan_out)).
    static MlpEncoder init(const std::vector<std::size_t>& dims, Rng& rng, double dropout = 0.0);

    std::size_t input_dim() const { return weights_.empty() ? 0 : weights_.front().cols(); }
    std::size_t output_dim() const { return weights_.empty() ? 0 : weights_.back().rows(); }
    std::size_t num_layers() const { return weights_.size(); }
    double dropout() const { return dropout_; }

    struct Cache {
        std::vector<Vector> activations;  // [0] = input, then post-ReLU (and dropout) per hidden layer
        std::vector<Vector> preacts;      // pre-activation per layer
        std::vector<Vector> masks;        // dropout keep-masks per hidden layer (train mode)
    };

    // Deterministic when train_mode is off; inverted dropout with rng when on.
    Vector forward(const Vector& c, Cache* cache = nullptr, bool train_mode = false,
                   Rng* rng = nullptr) const;

    // Accumulates parameter gradients into `grads` (same topology); returns dL/dinput.
    Vector backward(const Cache& cache, const Vector& d_out, MlpEncoder& grads) const;

    MlpEncoder zeros_like() const;

    std::size_t param_count() const;
    void get_params(double* out) const;
    void set_params(const double* in);

    const std::vector<Matrix>& weights() const { return weights_; }
    const std::vector<Vector>& biases() const { return biases_; }
    std::vector<Matrix>& weights() { return weights_; }
    std::vector<Vector>& biases() { return biases_; }

private:
    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;
    double dropout_ = 0.0;
};

// Gated recurrent encoder: a GRU cell fed the same context at every step,
// with a linear head producing per-step attention logits over K atoms.
class RecurrentEncoder {
public:
    RecurrentEncoder() = default;

    static RecurrentEncoder init(std::size_t input_dim, std::size_t hidden_dim,
                                 std::size_t output_dim, Rng& rng);

    std::size_t input_dim() const { return w_z_.cols(); }
    std::size_t hidden_dim() const { return w_z_.rows(); }
    std::size_t output_dim() const { return w_out_.rows(); }

    struct Cache {
        Vector input;
        std::vector<Vector> h;       // h[0] = h0 = 0, h[t] for t = 1..m
        std::vector<Vector> update;  // z_t
        std::vector<Vector> reset;   // r_t
        std::vector<Vector> cand;    // tanh candidate
    };

    // Unrolls m >= 1 steps; returns the per-step head logits (m x K).
    std::vector<Vector> forward(const Vector& c, std::size_t steps, Cache* cache = nullptr) const;

    // BPTT; accumulates into `grads`, returns dL/dinput.
    Vector backward(const Cache& cache, const std::vector<Vector>& d_logits,
                    RecurrentEncoder& grads) const;

    RecurrentEncoder zeros_like() const;

    std::size_t param_count() const;
    void get_params(double* out) const;
    void set_params(const double* in);

private:
    // update gate, reset gate, candidate, output head
    Matrix w_z_, u_z_;
    Vector b_z_;
    Matrix w_r_, u_r_;
    Vector b_r_;
    Matrix w_h_, u_h_;
    Vector b_h_;
    Matrix w_out_;
    Vector b_out_;

    template <typename F>
    void for_each_param(F&& f);
    template <typename F>
    void for_each_param(F&& f) const;
};

// theta = alpha^T D. alpha must lie on the simplex (checked to 1e-9).
Vector attention_compose(const Vector& alpha, const Matrix& dictionary);

// dL/dalpha and dictionary gradient for the composition.
Vector attention_compose_backward(const Vector& alpha, const Matrix& dictionary,
                                  const Vector& d_theta, Matrix& d_dictionary);

// Softmax jacobian-vector product: given alpha = softmax(logits) and dL/dalpha,
// returns dL/dlogits.
Vector softmax_backward(const Vector& alpha, const Vector& d_alpha);

// Per-step attention vectors from a recurrent encoder (softmax over each step's logits).
std::vector<Vector> recurrent_unroll(const RecurrentEncoder& enc, const Vector& c,
                                     std::size_t steps);

}  // namespace cen
