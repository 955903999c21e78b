#include "cen/cen_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include "cen/kernels.hpp"
#include "cen/numeric.hpp"

namespace cen {

Batch Batch::slice(const std::vector<std::size_t>& idx) const {
    Batch out;
    out.contexts.reserve(idx.size());
    out.attrs.reserve(idx.size());
    for (std::size_t i : idx) {
        out.contexts.push_back(contexts[i]);
        out.attrs.push_back(attrs[i]);
        if (!labels.empty()) out.labels.push_back(labels[i]);
        if (!survival_targets.empty()) out.survival_targets.push_back(survival_targets[i]);
    }
    return out;
}

CenModel CenModel::make_linear(std::size_t context_dim, std::size_t attr_dim,
                               std::size_t num_classes, std::size_t dict_size,
                               const std::vector<std::size_t>& hidden, Rng& rng, RegConfig reg) {
    if (dict_size == 0) throw InvalidInput("CenModel: dictionary size must be >= 1");
    CenModel m;
    m.family = Family::Linear;
    m.encoder_kind = EncoderKind::Mlp;
    m.num_classes = num_classes;
    m.attr_dim = attr_dim;
    m.reg = reg;
    std::vector<std::size_t> dims{context_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(dict_size);
    m.mlp = MlpEncoder::init(dims, rng);
    Matrix d(dict_size, m.theta_dim());
    const double s = std::sqrt(6.0 / static_cast<double>(dict_size + m.theta_dim()));
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = rng.uniform(-s, s);
    m.dictionary = std::move(d);
    m.check_shapes();
    return m;
}

CenModel CenModel::make_linear_unconstrained(std::size_t context_dim, std::size_t attr_dim,
                                             std::size_t num_classes,
                                             const std::vector<std::size_t>& hidden, Rng& rng,
                                             RegConfig reg) {
    CenModel m;
    m.family = Family::Linear;
    m.encoder_kind = EncoderKind::Mlp;
    m.num_classes = num_classes;
    m.attr_dim = attr_dim;
    m.reg = reg;
    std::vector<std::size_t> dims{context_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(m.theta_dim());
    m.mlp = MlpEncoder::init(dims, rng);
    m.check_shapes();
    return m;
}

CenModel CenModel::make_survival_mlp(std::size_t context_dim, std::size_t attr_dim,
                                     std::size_t intervals, std::size_t dict_size,
                                     const std::vector<std::size_t>& hidden, Rng& rng,
                                     RegConfig reg) {
    if (dict_size == 0) throw InvalidInput("CenModel: dictionary size must be >= 1");
    CenModel m;
    m.family = Family::SurvivalCrf;
    m.encoder_kind = EncoderKind::Mlp;
    m.intervals = intervals;
    m.attr_dim = attr_dim;
    m.reg = reg;
    std::vector<std::size_t> dims{context_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(dict_size);
    m.mlp = MlpEncoder::init(dims, rng);
    Matrix d(dict_size, m.theta_dim());
    const double s = std::sqrt(6.0 / static_cast<double>(dict_size + m.theta_dim()));
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = rng.uniform(-s, s);
    m.dictionary = std::move(d);
    m.check_shapes();
    return m;
}

CenModel CenModel::make_survival_recurrent(std::size_t context_dim, std::size_t attr_dim,
                                           std::size_t intervals, std::size_t dict_size,
                                           std::size_t hidden, Rng& rng, RegConfig reg) {
    if (dict_size == 0) throw InvalidInput("CenModel: dictionary size must be >= 1");
    CenModel m;
    m.family = Family::SurvivalCrf;
    m.encoder_kind = EncoderKind::Recurrent;
    m.intervals = intervals;
    m.attr_dim = attr_dim;
    m.reg = reg;
    m.rnn = RecurrentEncoder::init(context_dim, hidden, dict_size, rng);
    Matrix d(dict_size, attr_dim);
    const double s = std::sqrt(6.0 / static_cast<double>(dict_size + attr_dim));
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = rng.uniform(-s, s);
    m.dictionary = std::move(d);
    m.check_shapes();
    return m;
}

std::size_t CenModel::theta_dim() const {
    if (family == Family::Linear) return LinearExplanation::param_count(num_classes, attr_dim);
    return intervals * attr_dim;
}

void CenModel::check_shapes() const {
    if (attr_dim == 0) throw InvalidInput("CenModel: attr_dim must be positive");
    if (family == Family::Linear && num_classes < 2) {
        throw InvalidInput("CenModel: need at least 2 classes");
    }
    if (family == Family::SurvivalCrf && intervals == 0) {
        throw InvalidInput("CenModel: need at least 1 interval");
    }
    const std::size_t enc_out =
        encoder_kind == EncoderKind::Mlp ? mlp.output_dim() : rnn.output_dim();
    if (dictionary) {
        if (enc_out != dictionary->rows()) {
            throw InvalidInput("CenModel: encoder output dim != dictionary atoms");
        }
        const std::size_t atom_dim =
            (family == Family::SurvivalCrf && encoder_kind == EncoderKind::Recurrent)
                ? attr_dim
                : theta_dim();
        if (dictionary->cols() != atom_dim) {
            throw InvalidInput("CenModel: dictionary atom dim mismatch");
        }
    } else {
        const std::size_t want =
            (family == Family::SurvivalCrf && encoder_kind == EncoderKind::Recurrent)
                ? attr_dim
                : theta_dim();
        if (enc_out != want) {
            throw InvalidInput("CenModel: unconstrained encoder output dim mismatch");
        }
    }
}

std::size_t CenModel::param_count() const {
    std::size_t n = encoder_kind == EncoderKind::Mlp ? mlp.param_count() : rnn.param_count();
    if (dictionary) n += dictionary->size();
    return n;
}

Vector CenModel::get_params() const {
    Vector flat(param_count());
    double* out = flat.data();
    if (encoder_kind == EncoderKind::Mlp) {
        mlp.get_params(out);
        out += mlp.param_count();
    } else {
        rnn.get_params(out);
        out += rnn.param_count();
    }
    if (dictionary) std::memcpy(out, dictionary->data(), dictionary->size() * sizeof(double));
    return flat;
}

void CenModel::set_params(const Vector& flat) {
    if (flat.size() != param_count()) throw InvalidInput("CenModel::set_params: size mismatch");
    const double* in = flat.data();
    if (encoder_kind == EncoderKind::Mlp) {
        mlp.set_params(in);
        in += mlp.param_count();
    } else {
        rnn.set_params(in);
        in += rnn.param_count();
    }
    if (dictionary) std::memcpy(dictionary->data(), in, dictionary->size() * sizeof(double));
}

LinearExplanation CenModel::linear_explanation(const Vector& theta) const {
    return LinearExplanation::from_flat(theta, num_classes, attr_dim);
}

SurvivalExplanation CenModel::survival_explanation(const Vector& theta) const {
    return SurvivalExplanation::from_flat(theta, intervals, attr_dim);
}

namespace {

// Per-sample forward state kept around for the backward pass.
struct SampleCtx {
    MlpEncoder::Cache mlp_cache;
    RecurrentEncoder::Cache rnn_cache;
    Vector alpha;
    std::vector<Vector> alphas;  // recurrent, per step
    Vector theta;
};

struct GradAccum {
    MlpEncoder mlp_g;
    RecurrentEncoder rnn_g;
    Matrix dict_g;

    explicit GradAccum(const CenModel& m) {
        if (m.encoder_kind == EncoderKind::Mlp) {
            mlp_g = m.mlp.zeros_like();
        } else {
            rnn_g = m.rnn.zeros_like();
        }
        if (m.dictionary) dict_g = Matrix(m.dictionary->rows(), m.dictionary->cols());
    }

    Vector to_flat(const CenModel& m) const {
        Vector flat(m.param_count());
        double* out = flat.data();
        if (m.encoder_kind == EncoderKind::Mlp) {
            mlp_g.get_params(out);
            out += mlp_g.param_count();
        } else {
            rnn_g.get_params(out);
            out += rnn_g.param_count();
        }
        if (m.dictionary) std::memcpy(out, dict_g.data(), dict_g.size() * sizeof(double));
        return flat;
    }
};

Vector forward_theta(const CenModel& m, const Vector& c, SampleCtx& ctx, bool train_mode,
                     Rng* rng) {
    if (m.encoder_kind == EncoderKind::Mlp) {
        Vector out = m.mlp.forward(c, &ctx.mlp_cache, train_mode, rng);
        if (m.dictionary) {
            ctx.alpha = softmax(out);
            ctx.theta = attention_compose(ctx.alpha, *m.dictionary);
        } else {
            ctx.theta = std::move(out);
        }
    } else {
        auto logits = m.rnn.forward(c, m.intervals, &ctx.rnn_cache);
        ctx.theta.assign(m.theta_dim(), 0.0);
        ctx.alphas.clear();
        for (std::size_t t = 0; t < m.intervals; ++t) {
            Vector theta_t;
            if (m.dictionary) {
                Vector a = softmax(logits[t]);
                theta_t = attention_compose(a, *m.dictionary);
                ctx.alphas.push_back(std::move(a));
            } else {
                theta_t = logits[t];
            }
            std::memcpy(ctx.theta.data() + t * m.attr_dim, theta_t.data(),
                        m.attr_dim * sizeof(double));
        }
    }
    return ctx.theta;
}

void backward_theta(const CenModel& m, SampleCtx& ctx, const Vector& d_theta, GradAccum& g) {
    if (m.encoder_kind == EncoderKind::Mlp) {
        if (m.dictionary) {
            Vector d_alpha = attention_compose_backward(ctx.alpha, *m.dictionary, d_theta, g.dict_g);
            Vector d_logits = softmax_backward(ctx.alpha, d_alpha);
            m.mlp.backward(ctx.mlp_cache, d_logits, g.mlp_g);
        } else {
            m.mlp.backward(ctx.mlp_cache, d_theta, g.mlp_g);
        }
    } else {
        std::vector<Vector> d_logits(m.intervals);
        for (std::size_t t = 0; t < m.intervals; ++t) {
            Vector d_slice(d_theta.begin() + t * m.attr_dim,
                           d_theta.begin() + (t + 1) * m.attr_dim);
            if (m.dictionary) {
                Vector d_alpha =
                    attention_compose_backward(ctx.alphas[t], *m.dictionary, d_slice, g.dict_g);
                d_logits[t] = softmax_backward(ctx.alphas[t], d_alpha);
            } else {
                d_logits[t] = std::move(d_slice);
            }
        }
        m.rnn.backward(ctx.rnn_cache, d_logits, g.rnn_g);
    }
}

// L1/L2 posterior penalty on a generated theta; adds the subgradient to d_theta.
double theta_penalty(const CenModel& m, const Vector& theta, Vector& d_theta, double scale) {
    double p = 0.0;
    const double l1 = m.reg.l1_theta, l2 = m.reg.l2_theta;
    if (l1 > 0.0 || l2 > 0.0) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            p += l1 * std::fabs(theta[i]) + l2 * theta[i] * theta[i];
            double sg = theta[i] > 0.0 ? 1.0 : (theta[i] < 0.0 ? -1.0 : 0.0);
            d_theta[i] += scale * (l1 * sg + 2.0 * l2 * theta[i]);
        }
    }
    if (m.family == Family::SurvivalCrf && m.reg.c2_smooth > 0.0) {
        const std::size_t d = m.attr_dim;
        for (std::size_t t = 0; t + 1 < m.intervals; ++t) {
            for (std::size_t i = 0; i < d; ++i) {
                const double diff = theta[(t + 1) * d + i] - theta[t * d + i];
                p += m.reg.c2_smooth * diff * diff;
                d_theta[(t + 1) * d + i] += scale * 2.0 * m.reg.c2_smooth * diff;
                d_theta[t * d + i] -= scale * 2.0 * m.reg.c2_smooth * diff;
            }
        }
    }
    return p;
}

double dict_penalty(const CenModel& m, GradAccum& g) {
    if (!m.dictionary) return 0.0;
    const double l1 = m.reg.l1_dict, l2 = m.reg.l2_dict;
    if (l1 == 0.0 && l2 == 0.0) return 0.0;
    double p = 0.0;
    const Matrix& d = *m.dictionary;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double v = d.data()[i];
        p += l1 * std::fabs(v) + l2 * v * v;
        double sg = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        g.dict_g.data()[i] += l1 * sg + 2.0 * l2 * v;
    }
    return p;
}

void check_batch(const CenModel& m, const Batch& batch) {
    if (batch.size() == 0) throw InvalidInput("empty batch");
    if (m.family == Family::Linear && batch.labels.size() != batch.size()) {
        throw InvalidInput("batch labels missing for linear family");
    }
    if (m.family == Family::SurvivalCrf && batch.survival_targets.size() != batch.size()) {
        throw InvalidInput("batch survival targets missing");
    }
}

}  // namespace

CenForward cen_forward(const CenModel& model, const Vector& c, const Vector& x) {
    if (x.size() != model.attr_dim) throw InvalidInput("cen_forward: attribute dim mismatch");
    SampleCtx ctx;
    Vector theta = forward_theta(model, c, ctx, false, nullptr);
    CenForward res;
    res.theta = theta;
    res.alpha = ctx.alpha;
    res.alphas = ctx.alphas;
    if (model.family == Family::Linear) {
        res.prediction = linear_predict(model.linear_explanation(theta), x);
    } else {
        Vector lp = survival_log_probs(model.survival_explanation(theta), x);
        res.prediction.resize(lp.size());
        for (std::size_t i = 0; i < lp.size(); ++i) res.prediction[i] = std::exp(lp[i]);
    }
    return res;
}

LossResult cen_nll(const CenModel& model, const Batch& batch, bool train_mode, Rng* rng) {
    check_batch(model, batch);
    const std::size_t n = batch.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    GradAccum g(model);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        SampleCtx ctx;
        Vector theta = forward_theta(model, batch.contexts[i], ctx, train_mode, rng);
        Vector d_theta(theta.size(), 0.0);
        if (model.family == Family::Linear) {
            auto r = linear_nll_grad(model.linear_explanation(theta), batch.attrs[i],
                                     batch.labels[i]);
            loss += inv_n * r.loss;
            kernels::axpy(inv_n, r.d_theta.data(), d_theta.data(), d_theta.size());
        } else {
            auto r = survival_grad(model.survival_explanation(theta), batch.attrs[i],
                                   batch.survival_targets[i]);
            loss += inv_n * r.loss;
            kernels::axpy(inv_n, r.d_flat.data(), d_theta.data(), d_theta.size());
        }
        loss += inv_n * theta_penalty(model, theta, d_theta, inv_n);
        backward_theta(model, ctx, d_theta, g);
    }
    loss += dict_penalty(model, g);
    if (!std::isfinite(loss)) {
        throw DivergedTraining("cen_nll: non-finite loss (batch size " + std::to_string(n) + ")");
    }
    return {loss, g.to_flat(model)};
}

namespace {

// Shared core for the entropy estimator and its gradient.
double entropy_core(const CenModel& model, const Batch& batch, GradAccum* g) {
    if (model.family != Family::Linear) {
        throw UnimplementedFeature("entropy_estimate: only the linear family is supported");
    }
    if (batch.size() < 2) throw InvalidInput("entropy_estimate: need |B| >= 2");
    const std::size_t n = batch.size();
    const std::size_t classes = model.num_classes;
    const double inv_n = 1.0 / static_cast<double>(n);

    // theta_i = phi(c_i), cached with forward state for the backward pass
    std::vector<SampleCtx> ctxs(n);
    std::vector<LinearExplanation> exps;
    exps.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vector theta = forward_theta(model, batch.contexts[i], ctxs[i], false, nullptr);
        exps.push_back(model.linear_explanation(theta));
    }

    double entropy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // p(y | x_j, theta_i) for every j in the batch
        std::vector<Vector> probs(n);
        Vector mix(classes, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            probs[j] = linear_predict(exps[i], batch.attrs[j]);
            kernels::axpy(inv_n, probs[j].data(), mix.data(), classes);
        }
        const Vector& own = probs[i];
        for (std::size_t y = 0; y < classes; ++y) {
            entropy -= inv_n * own[y] * std::log(std::max(mix[y], 1e-300));
        }
        if (!g) continue;

        // dH/d p(y|x_j, theta_i): own term at j == i plus the mixture route
        Vector d_theta(model.theta_dim(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            Vector coef(classes);
            for (std::size_t y = 0; y < classes; ++y) {
                coef[y] = -inv_n * inv_n * own[y] / std::max(mix[y], 1e-300);
                if (j == i) coef[y] += -inv_n * std::log(std::max(mix[y], 1e-300));
            }
            // chain through the softmax of W x_j + b at theta_i
            const Vector& p = probs[j];
            const double inner = dot(coef, p);
            Vector d_logits(classes);
            for (std::size_t k = 0; k < classes; ++k) d_logits[k] = p[k] * (coef[k] - inner);
            const std::size_t wsize = classes * model.attr_dim;
            for (std::size_t k = 0; k < classes; ++k) {
                kernels::axpy(d_logits[k], batch.attrs[j].data(),
                              d_theta.data() + k * model.attr_dim, model.attr_dim);
                d_theta[wsize + k] += d_logits[k];
            }
        }
        backward_theta(model, ctxs[i], d_theta, *g);
    }
    return entropy;
}

}  // namespace

double entropy_estimate(const CenModel& model, const Batch& batch) {
    return entropy_core(model, batch, nullptr);
}

LossResult entropy_estimate_grad(const CenModel& model, const Batch& batch) {
    GradAccum g(model);
    double h = entropy_core(model, batch, &g);
    return {h, g.to_flat(model)};
}

LossResult cen_regularized_loss(const CenModel& model, const Batch& batch, bool train_mode,
                                Rng* rng) {
    LossResult nll = cen_nll(model, batch, train_mode, rng);
    const double lambda = model.reg.entropy_weight;
    if (lambda == 0.0) return nll;
    LossResult ent = entropy_estimate_grad(model, batch);
    nll.loss -= lambda * ent.loss;
    kernels::axpy(-lambda, ent.grad.data(), nll.grad.data(), nll.grad.size());
    if (!std::isfinite(nll.loss)) throw DivergedTraining("cen_regularized_loss: non-finite loss");
    return nll;
}

LossResult moe_nll(const CenModel& model, const Batch& batch, bool train_mode, Rng* rng) {
    if (model.family != Family::Linear || !model.dictionary) {
        throw InvalidInput("moe_nll: requires linear family with a dictionary");
    }
    check_batch(model, batch);
    const std::size_t n = batch.size();
    const std::size_t k_atoms = model.dictionary->rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    GradAccum g(model);
    double loss = 0.0;

    std::vector<LinearExplanation> experts;
    experts.reserve(k_atoms);
    for (std::size_t k = 0; k < k_atoms; ++k) {
        Vector atom(model.dictionary->row(k), model.dictionary->row(k) + model.dictionary->cols());
        experts.push_back(model.linear_explanation(atom));
    }

    for (std::size_t i = 0; i < n; ++i) {
        MlpEncoder::Cache cache;
        Vector logits = model.mlp.forward(batch.contexts[i], &cache, train_mode, rng);
        Vector alpha = softmax(logits);

        // mixture of expert likelihoods
        Vector lik(k_atoms);
        double mix = 0.0;
        std::vector<LinearNllResult> expert_grads(k_atoms);
        for (std::size_t k = 0; k < k_atoms; ++k) {
            expert_grads[k] = linear_nll_grad(experts[k], batch.attrs[i], batch.labels[i]);
            lik[k] = std::exp(-expert_grads[k].loss);
            mix += alpha[k] * lik[k];
        }
        mix = std::max(mix, 1e-300);
        loss += -inv_n * std::log(mix);

        Vector d_alpha(k_atoms);
        for (std::size_t k = 0; k < k_atoms; ++k) {
            d_alpha[k] = -inv_n * lik[k] / mix;
            // d/dtheta_k: -(alpha_k / mix) * dlik_k = (alpha_k lik_k / mix) * dNLL_k
            const double w = inv_n * alpha[k] * lik[k] / mix;
            if (w != 0.0) {
                kernels::axpy(w, expert_grads[k].d_theta.data(), g.dict_g.row(k),
                              g.dict_g.cols());
            }
        }
        Vector d_logits = softmax_backward(alpha, d_alpha);
        model.mlp.backward(cache, d_logits, g.mlp_g);
    }
    loss += dict_penalty(model, g);
    if (!std::isfinite(loss)) throw DivergedTraining("moe_nll: non-finite loss");
    return {loss, g.to_flat(model)};
}

FanoReport fano_diagnostic(const CenModel& model, const Batch& dataset, Rng& rng) {
    if (model.family != Family::Linear) {
        throw UnimplementedFeature("fano_diagnostic: linear family only");
    }
    if (model.num_classes < 2) throw InvalidInput("fano_diagnostic: need |Y| >= 2");
    check_batch(model, dataset);
    const std::size_t n = dataset.size();
    if (n < 4) throw InvalidInput("fano_diagnostic: dataset too small");

    std::vector<Vector> thetas(n);
    std::vector<std::size_t> preds(n);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        CenForward f = cen_forward(model, dataset.contexts[i], dataset.attrs[i]);
        thetas[i] = std::move(f.theta);
        preds[i] = static_cast<std::size_t>(
            std::max_element(f.prediction.begin(), f.prediction.end()) - f.prediction.begin());
        if (preds[i] == dataset.labels[i]) ++correct;
    }

    FanoReport rep;
    rep.epsilon_hat = 1.0 - static_cast<double>(correct) / static_cast<double>(n);
    rep.delta_hat = entropy_estimate(model, dataset);
    rep.bound = (rep.delta_hat - 1.0) / std::log(static_cast<double>(model.num_classes)) -
                rep.epsilon_hat;

    // Held-out split for the theta-alone predictor.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
    const std::size_t n_fit = n / 2;

    // Cluster generated thetas: exact-match groups when attention is hard,
    // k-means with K clusters otherwise.
    const std::size_t k_clusters = std::max<std::size_t>(2, std::min<std::size_t>(
        model.dictionary ? model.dictionary->rows() : 4, n_fit));
    std::map<Vector, std::size_t> exact;
    for (std::size_t i = 0; i < n; ++i) {
        if (exact.find(thetas[i]) == exact.end()) exact.emplace(thetas[i], exact.size());
    }
    std::vector<std::size_t> cluster_of(n);
    std::size_t n_clusters;
    if (exact.size() <= 4 * k_clusters) {
        n_clusters = exact.size();
        for (std::size_t i = 0; i < n; ++i) cluster_of[i] = exact[thetas[i]];
    } else {
        // plain k-means on the fit split, assignment everywhere
        n_clusters = k_clusters;
        std::vector<Vector> centers;
        for (std::size_t k = 0; k < n_clusters; ++k) {
            centers.push_back(thetas[order[rng.below(n_fit)]]);
        }
        for (int iter = 0; iter < 25; ++iter) {
            std::vector<Vector> sums(n_clusters, Vector(thetas[0].size(), 0.0));
            std::vector<std::size_t> counts(n_clusters, 0);
            for (std::size_t ii = 0; ii < n_fit; ++ii) {
                const std::size_t i = order[ii];
                std::size_t best = 0;
                double best_d = norm2(sub(thetas[i], centers[0]));
                for (std::size_t k = 1; k < n_clusters; ++k) {
                    double d = norm2(sub(thetas[i], centers[k]));
                    if (d < best_d) best_d = d, best = k;
                }
                kernels::axpy(1.0, thetas[i].data(), sums[best].data(), sums[best].size());
                ++counts[best];
            }
            for (std::size_t k = 0; k < n_clusters; ++k) {
                if (counts[k] > 0) {
                    kernels::scale(1.0 / static_cast<double>(counts[k]), sums[k].data(),
                                   sums[k].size());
                    centers[k] = sums[k];
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = norm2(sub(thetas[i], centers[0]));
            for (std::size_t k = 1; k < n_clusters; ++k) {
                double d = norm2(sub(thetas[i], centers[k]));
                if (d < best_d) best_d = d, best = k;
            }
            cluster_of[i] = best;
        }
    }

    // Majority label per cluster on the fit split.
    std::vector<std::vector<std::size_t>> votes(n_clusters,
                                                std::vector<std::size_t>(model.num_classes, 0));
    for (std::size_t ii = 0; ii < n_fit; ++ii) {
        const std::size_t i = order[ii];
        ++votes[cluster_of[i]][dataset.labels[i]];
    }
    std::vector<std::size_t> majority(n_clusters, 0);
    for (std::size_t k = 0; k < n_clusters; ++k) {
        majority[k] = static_cast<std::size_t>(
            std::max_element(votes[k].begin(), votes[k].end()) - votes[k].begin());
    }

    std::size_t full_ok = 0, theta_ok = 0, n_eval = 0;
    for (std::size_t ii = n_fit; ii < n; ++ii) {
        const std::size_t i = order[ii];
        ++n_eval;
        if (preds[i] == dataset.labels[i]) ++full_ok;
        if (majority[cluster_of[i]] == dataset.labels[i]) ++theta_ok;
    }
    rep.acc_full = static_cast<double>(full_ok) / static_cast<double>(n_eval);
    rep.acc_theta_only = static_cast<double>(theta_ok) / static_cast<double>(n_eval);
    rep.contribution = rep.acc_full - rep.acc_theta_only;
    rep.holds = rep.contribution >= rep.bound - 1e-6;
    return rep;
}

}  // namespace cen
