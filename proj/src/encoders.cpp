#include "cen/encoders.hpp"

#include <cmath>
#include <cstring>

#include "cen/kernels.hpp"
#include "cen/numeric.hpp"

namespace cen {

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-s, s);
    return m;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

MlpEncoder MlpEncoder::init(const std::vector<std::size_t>& dims, Rng& rng, double dropout) {
    if (dims.size() < 2) throw InvalidInput("MlpEncoder: need at least input and output dims");
    if (dropout < 0.0 || dropout >= 1.0) throw InvalidInput("MlpEncoder: dropout must be in [0,1)");
    MlpEncoder enc;
    enc.dropout_ = dropout;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        enc.weights_.push_back(glorot(dims[l + 1], dims[l], rng));
        enc.biases_.push_back(Vector(dims[l + 1], 0.0));
    }
    return enc;
}

Vector MlpEncoder::forward(const Vector& c, Cache* cache, bool train_mode, Rng* rng) const {
    if (c.size() != input_dim()) throw InvalidInput("MlpEncoder::forward: input dim mismatch");
    if (cache) {
        cache->activations.assign(1, c);
        cache->preacts.clear();
        cache->masks.clear();
    }
    Vector a = c;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Vector z = matvec(weights_[l], a);
        kernels::axpy(1.0, biases_[l].data(), z.data(), z.size());
        if (cache) cache->preacts.push_back(z);
        const bool hidden = l + 1 < weights_.size();
        if (hidden) {
            for (double& v : z) v = v > 0.0 ? v : 0.0;
            if (train_mode && dropout_ > 0.0) {
                if (!rng) throw InvalidInput("MlpEncoder::forward: dropout requires rng");
                Vector mask(z.size());
                const double keep = 1.0 - dropout_;
                for (std::size_t i = 0; i < z.size(); ++i) {
                    mask[i] = rng->uniform() < keep ? 1.0 / keep : 0.0;
                    z[i] *= mask[i];
                }
                if (cache) cache->masks.push_back(std::move(mask));
            } else if (cache) {
                cache->masks.push_back(Vector(z.size(), 1.0));
            }
        }
        if (cache && hidden) cache->activations.push_back(z);
        a = std::move(z);
    }
    return a;
}

Vector MlpEncoder::backward(const Cache& cache, const Vector& d_out, MlpEncoder& grads) const {
    if (d_out.size() != output_dim()) throw InvalidInput("MlpEncoder::backward: grad dim mismatch");
    Vector delta = d_out;
    for (std::size_t l = weights_.size(); l-- > 0;) {
        const Vector& a_in = cache.activations[l];
        outer_add(grads.weights_[l], 1.0, delta, a_in);
        kernels::axpy(1.0, delta.data(), grads.biases_[l].data(), delta.size());
        Vector d_in = matvec_t(weights_[l], delta);
        if (l > 0) {
            // back through dropout mask and ReLU of the previous hidden layer
            const Vector& pre = cache.preacts[l - 1];
            const Vector& mask = cache.masks[l - 1];
            for (std::size_t i = 0; i < d_in.size(); ++i) {
                d_in[i] *= mask[i] * (pre[i] > 0.0 ? 1.0 : 0.0);
            }
        }
        delta = std::move(d_in);
    }
    return delta;
}

MlpEncoder MlpEncoder::zeros_like() const {
    MlpEncoder g;
    g.dropout_ = dropout_;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        g.weights_.push_back(Matrix(weights_[l].rows(), weights_[l].cols()));
        g.biases_.push_back(Vector(biases_[l].size(), 0.0));
    }
    return g;
}

std::size_t MlpEncoder::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
}

void MlpEncoder::get_params(double* out) const {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        std::memcpy(out, weights_[l].data(), weights_[l].size() * sizeof(double));
        out += weights_[l].size();
        std::memcpy(out, biases_[l].data(), biases_[l].size() * sizeof(double));
        out += biases_[l].size();
    }
}

void MlpEncoder::set_params(const double* in) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        std::memcpy(weights_[l].data(), in, weights_[l].size() * sizeof(double));
        in += weights_[l].size();
        std::memcpy(biases_[l].data(), in, biases_[l].size() * sizeof(double));
        in += biases_[l].size();
    }
}

RecurrentEncoder RecurrentEncoder::init(std::size_t input_dim, std::size_t hidden_dim,
                                        std::size_t output_dim, Rng& rng) {
    if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
        throw InvalidInput("RecurrentEncoder: zero dimension");
    }
    RecurrentEncoder e;
    e.w_z_ = glorot(hidden_dim, input_dim, rng);
    e.u_z_ = glorot(hidden_dim, hidden_dim, rng);
    e.b_z_ = Vector(hidden_dim, 0.0);
    e.w_r_ = glorot(hidden_dim, input_dim, rng);
    e.u_r_ = glorot(hidden_dim, hidden_dim, rng);
    e.b_r_ = Vector(hidden_dim, 0.0);
    e.w_h_ = glorot(hidden_dim, input_dim, rng);
    e.u_h_ = glorot(hidden_dim, hidden_dim, rng);
    e.b_h_ = Vector(hidden_dim, 0.0);
    e.w_out_ = glorot(output_dim, hidden_dim, rng);
    e.b_out_ = Vector(output_dim, 0.0);
    return e;
}

std::vector<Vector> RecurrentEncoder::forward(const Vector& c, std::size_t steps,
                                              Cache* cache) const {
    if (c.size() != input_dim()) throw InvalidInput("RecurrentEncoder::forward: input dim mismatch");
    if (steps == 0) throw InvalidInput("RecurrentEncoder::forward: need at least one step");
    const std::size_t h_dim = hidden_dim();
    Vector h(h_dim, 0.0);
    if (cache) {
        cache->input = c;
        cache->h.assign(1, h);
        cache->update.clear();
        cache->reset.clear();
        cache->cand.clear();
    }
    const Vector wz_c = matvec(w_z_, c);
    const Vector wr_c = matvec(w_r_, c);
    const Vector wh_c = matvec(w_h_, c);

    std::vector<Vector> logits;
    logits.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        Vector z = add(wz_c, matvec(u_z_, h));
        Vector r = add(wr_c, matvec(u_r_, h));
        for (std::size_t i = 0; i < h_dim; ++i) {
            z[i] = sigmoid(z[i] + b_z_[i]);
            r[i] = sigmoid(r[i] + b_r_[i]);
        }
        Vector rh(h_dim);
        for (std::size_t i = 0; i < h_dim; ++i) rh[i] = r[i] * h[i];
        Vector cand = add(wh_c, matvec(u_h_, rh));
        for (std::size_t i = 0; i < h_dim; ++i) cand[i] = std::tanh(cand[i] + b_h_[i]);
        Vector h_new(h_dim);
        for (std::size_t i = 0; i < h_dim; ++i) {
            h_new[i] = (1.0 - z[i]) * h[i] + z[i] * cand[i];
        }
        h = std::move(h_new);
        Vector out = matvec(w_out_, h);
        kernels::axpy(1.0, b_out_.data(), out.data(), out.size());
        logits.push_back(std::move(out));
        if (cache) {
            cache->h.push_back(h);
            cache->update.push_back(std::move(z));
            cache->reset.push_back(std::move(r));
            cache->cand.push_back(std::move(cand));
        }
    }
    return logits;
}

Vector RecurrentEncoder::backward(const Cache& cache, const std::vector<Vector>& d_logits,
                                  RecurrentEncoder& grads) const {
    const std::size_t steps = d_logits.size();
    const std::size_t h_dim = hidden_dim();
    const Vector& c = cache.input;
    Vector d_c(c.size(), 0.0);
    Vector d_h(h_dim, 0.0);

    for (std::size_t t = steps; t-- > 0;) {
        const Vector& h_t = cache.h[t + 1];
        const Vector& h_prev = cache.h[t];
        const Vector& z = cache.update[t];
        const Vector& r = cache.reset[t];
        const Vector& cand = cache.cand[t];

        // head
        outer_add(grads.w_out_, 1.0, d_logits[t], h_t);
        kernels::axpy(1.0, d_logits[t].data(), grads.b_out_.data(), d_logits[t].size());
        Vector dh = matvec_t(w_out_, d_logits[t]);
        kernels::axpy(1.0, d_h.data(), dh.data(), h_dim);

        // h_t = (1-z) h_prev + z cand
        Vector d_z(h_dim), d_cand(h_dim), d_hprev(h_dim);
        for (std::size_t i = 0; i < h_dim; ++i) {
            d_z[i] = dh[i] * (cand[i] - h_prev[i]);
            d_cand[i] = dh[i] * z[i];
            d_hprev[i] = dh[i] * (1.0 - z[i]);
        }
        // cand = tanh(Wh c + Uh (r*h_prev) + bh)
        Vector d_cand_pre(h_dim);
        for (std::size_t i = 0; i < h_dim; ++i) d_cand_pre[i] = d_cand[i] * (1.0 - cand[i] * cand[i]);
        Vector rh(h_dim);
        for (std::size_t i = 0; i < h_dim; ++i) rh[i] = r[i] * h_prev[i];
        outer_add(grads.w_h_, 1.0, d_cand_pre, c);
        outer_add(grads.u_h_, 1.0, d_cand_pre, rh);
        kernels::axpy(1.0, d_cand_pre.data(), grads.b_h_.data(), h_dim);
        Vector d_rh = matvec_t(u_h_, d_cand_pre);
        Vector d_r(h_dim);
        for (std::size_t i = 0; i < h_dim; ++i) {
            d_r[i] = d_rh[i] * h_prev[i];
            d_hprev[i] += d_rh[i] * r[i];
        }
        kernels::axpy(1.0, matvec_t(w_h_, d_cand_pre).data(), d_c.data(), d_c.size());

        // gates
        Vector d_z_pre(h_dim), d_r_pre(h_dim);
        for (std::size_t i = 0; i < h_dim; ++i) {
            d_z_pre[i] = d_z[i] * z[i] * (1.0 - z[i]);
            d_r_pre[i] = d_r[i] * r[i] * (1.0 - r[i]);
        }
        outer_add(grads.w_z_, 1.0, d_z_pre, c);
        outer_add(grads.u_z_, 1.0, d_z_pre, h_prev);
        kernels::axpy(1.0, d_z_pre.data(), grads.b_z_.data(), h_dim);
        outer_add(grads.w_r_, 1.0, d_r_pre, c);
        outer_add(grads.u_r_, 1.0, d_r_pre, h_prev);
        kernels::axpy(1.0, d_r_pre.data(), grads.b_r_.data(), h_dim);
        kernels::axpy(1.0, matvec_t(w_z_, d_z_pre).data(), d_c.data(), d_c.size());
        kernels::axpy(1.0, matvec_t(w_r_, d_r_pre).data(), d_c.data(), d_c.size());
        kernels::axpy(1.0, matvec_t(u_z_, d_z_pre).data(), d_hprev.data(), h_dim);
        kernels::axpy(1.0, matvec_t(u_r_, d_r_pre).data(), d_hprev.data(), h_dim);

        d_h = std::move(d_hprev);
    }
    return d_c;
}

template <typename F>
void RecurrentEncoder::for_each_param(F&& f) {
    f(w_z_.values());
    f(u_z_.values());
    f(b_z_);
    f(w_r_.values());
    f(u_r_.values());
    f(b_r_);
    f(w_h_.values());
    f(u_h_.values());
    f(b_h_);
    f(w_out_.values());
    f(b_out_);
}

template <typename F>
void RecurrentEncoder::for_each_param(F&& f) const {
    f(w_z_.values());
    f(u_z_.values());
    f(b_z_);
    f(w_r_.values());
    f(u_r_.values());
    f(b_r_);
    f(w_h_.values());
    f(u_h_.values());
    f(b_h_);
    f(w_out_.values());
    f(b_out_);
}

RecurrentEncoder RecurrentEncoder::zeros_like() const {
    RecurrentEncoder g = *this;
    g.for_each_param([](Vector& v) { std::fill(v.begin(), v.end(), 0.0); });
    return g;
}

std::size_t RecurrentEncoder::param_count() const {
    std::size_t n = 0;
    for_each_param([&](const Vector& v) { n += v.size(); });
    return n;
}

void RecurrentEncoder::get_params(double* out) const {
    for_each_param([&](const Vector& v) {
        std::memcpy(out, v.data(), v.size() * sizeof(double));
        out += v.size();
    });
}

void RecurrentEncoder::set_params(const double* in) {
    for_each_param([&](Vector& v) {
        std::memcpy(v.data(), in, v.size() * sizeof(double));
        in += v.size();
    });
}

Vector attention_compose(const Vector& alpha, const Matrix& dictionary) {
    if (alpha.size() != dictionary.rows()) {
        throw InvalidInput("attention_compose: attention length != dictionary rows");
    }
    double total = 0.0;
    for (double a : alpha) {
        if (a < -1e-9) throw InvalidInput("attention_compose: negative attention weight");
        total += a;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
        throw InvalidInput("attention_compose: attention does not sum to 1");
    }
    return matvec_t(dictionary, alpha);
}

Vector attention_compose_backward(const Vector& alpha, const Matrix& dictionary,
                                  const Vector& d_theta, Matrix& d_dictionary) {
    if (d_theta.size() != dictionary.cols()) {
        throw InvalidInput("attention_compose_backward: grad dim mismatch");
    }
    outer_add(d_dictionary, 1.0, alpha, d_theta);
    return matvec(dictionary, d_theta);  // dL/dalpha_k = D_k . d_theta
}

Vector softmax_backward(const Vector& alpha, const Vector& d_alpha) {
    const double inner = dot(alpha, d_alpha);
    Vector d_logits(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        d_logits[i] = alpha[i] * (d_alpha[i] - inner);
    }
    return d_logits;
}

std::vector<Vector> recurrent_unroll(const RecurrentEncoder& enc, const Vector& c,
                                     std::size_t steps) {
    auto logits = enc.forward(c, steps);
    std::vector<Vector> alphas;
    alphas.reserve(logits.size());
    for (auto& l : logits) alphas.push_back(softmax(l));
    return alphas;
}

}  // namespace cen
