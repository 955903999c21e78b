#include "cen/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cen/kernels.hpp"
#include "cen/numeric.hpp"

namespace cen::experiments {

namespace {

// Test-set counterpart of a training spec (same geometry, shifted seed).
SyntheticSpec test_spec(const SyntheticSpec& spec, std::size_t per_context = 100) {
    SyntheticSpec t = spec;
    t.per_context = per_context;
    t.seed = spec.seed ^ 0x5eedULL;
    return t;
}

double test_error(const CenModel& model, const Batch& test) {
    return 1.0 - evaluate_accuracy(model, test);
}

// Replaces each attribute with `views` noisy copies so that every retained
// column is a weak view of the signal; dropping columns then raises the error
// gradually (raw xor attrs are only 2-dimensional and individually clean).
std::vector<Vector> widen_attrs(const std::vector<Vector>& attrs, std::size_t views,
                                double jitter, Rng& rng) {
    std::vector<Vector> out;
    out.reserve(attrs.size());
    for (const auto& x : attrs) {
        Vector w;
        w.reserve(x.size() * views);
        for (std::size_t k = 0; k < views; ++k) {
            for (double v : x) w.push_back(v + jitter * rng.normal());
        }
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace

CenModel train_xor_cen(const SyntheticSpec& data_spec, const XorRunConfig& cfg, Batch* train_out,
                       Batch* test_out) {
    Batch train_set = gen_xor_context(data_spec);
    if (train_out) *train_out = train_set;
    if (test_out) *test_out = gen_xor_context(test_spec(data_spec));

    RegConfig reg;
    reg.entropy_weight = cfg.entropy_weight;
    Rng init(cfg.train.seed ^ 0xabcdULL);
    CenModel model = CenModel::make_linear(4, 2, 2, cfg.dict_size, {cfg.hidden}, init, reg);
    TrainConfig tc = cfg.train;
    tc.use_entropy_reg = cfg.entropy_weight > 0.0;
    train(model, train_set, {}, tc);
    return model;
}

std::vector<DictSizeRow> dict_size_sweep(const std::vector<std::size_t>& sizes,
                                         const std::vector<std::uint64_t>& seeds) {
    std::vector<DictSizeRow> rows;
    for (std::size_t k : sizes) {
        for (std::uint64_t seed : seeds) {
            SyntheticSpec spec;
            spec.seed = seed;
            XorRunConfig cfg;
            cfg.dict_size = k;
            cfg.train.seed = seed;
            Batch train_set, test_set;
            CenModel model = train_xor_cen(spec, cfg, &train_set, &test_set);

            // validation error on a seeded carve-out mirrors the train() split
            Rng rng(seed + 7);
            std::vector<std::size_t> order(train_set.size());
            std::iota(order.begin(), order.end(), 0);
            for (std::size_t i = order.size(); i-- > 1;) {
                std::swap(order[i], order[rng.below(i + 1)]);
            }
            order.resize(train_set.size() / 5);
            Batch val = train_set.slice(order);
            rows.push_back({k, seed, test_error(model, val), test_error(model, test_set)});
        }
    }
    return rows;
}

MlpClassifier MlpClassifier::init(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                                  Rng& rng) {
    MlpClassifier c;
    c.net = MlpEncoder::init({input_dim, hidden, classes}, rng);
    return c;
}

Vector MlpClassifier::predict(const Vector& features) const {
    return softmax(net.forward(features));
}

double MlpClassifier::accuracy(const std::vector<Vector>& features,
                               const std::vector<std::size_t>& labels) const {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        Vector p = predict(features[i]);
        auto pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        ok += pred == labels[i];
    }
    return static_cast<double>(ok) / static_cast<double>(features.size());
}

MlpClassifier train_mlp_classifier(const std::vector<Vector>& features,
                                   const std::vector<std::size_t>& labels, std::size_t classes,
                                   std::size_t hidden, const TrainConfig& cfg) {
    Rng rng(cfg.seed ^ 0x9999ULL);
    MlpClassifier clf = MlpClassifier::init(features[0].size(), hidden, classes, rng);
    Optimizer opt(cfg.optimizer, cfg, clf.net.param_count());
    Vector params(clf.net.param_count());
    clf.net.get_params(params.data());

    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            clf.net.set_params(params.data());
            MlpEncoder grads = clf.net.zeros_like();
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t ii = start; ii < end; ++ii) {
                const std::size_t i = order[ii];
                MlpEncoder::Cache cache;
                Vector logits = clf.net.forward(features[i], &cache);
                Vector p = softmax(logits);
                Vector d_logits = p;
                d_logits[labels[i]] -= 1.0;
                kernels::scale(inv, d_logits.data(), d_logits.size());
                clf.net.backward(cache, d_logits, grads);
            }
            Vector g(grads.param_count());
            grads.get_params(g.data());
            opt.step(params, g);
        }
    }
    clf.net.set_params(params.data());
    return clf;
}

std::vector<SampleEfficiencyRow> sample_efficiency_sweep(
    const std::vector<double>& fractions, const std::vector<std::uint64_t>& seeds) {
    std::vector<SampleEfficiencyRow> rows;
    for (double frac : fractions) {
        for (std::uint64_t seed : seeds) {
            // overlapping blobs: per-context rules are hard to learn from a
            // handful of points, so sharing dictionary atoms pays off
            SyntheticSpec spec;
            spec.per_context = 100;
            spec.noise = 0.5;
            spec.seed = seed;
            Batch full = gen_xor_context(spec);
            Batch test = gen_xor_context(test_spec(spec));

            Rng rng(seed + 31);
            std::vector<std::size_t> order(full.size());
            std::iota(order.begin(), order.end(), 0);
            for (std::size_t i = order.size(); i-- > 1;) {
                std::swap(order[i], order[rng.below(i + 1)]);
            }
            order.resize(std::max<std::size_t>(
                8, static_cast<std::size_t>(frac * static_cast<double>(full.size()))));
            Batch train_set = full.slice(order);

            // four atoms with a linear gate: one rule per context type, few
            // parameters to estimate from the small slice
            Rng init(seed ^ 0xabcdULL);
            CenModel model = CenModel::make_linear(4, 2, 2, 4, {}, init);
            TrainConfig tc;
            tc.learning_rate = 0.01;
            tc.max_epochs = 300;
            tc.patience = 300;
            tc.seed = seed;
            // validate on the training slice itself: at small fractions a
            // carved-out split would starve both models of data
            train(model, train_set, train_set, tc);

            // baseline: MLP classifier on concatenated c (+) x
            std::vector<Vector> feats, test_feats;
            for (std::size_t i = 0; i < train_set.size(); ++i) {
                Vector f = train_set.contexts[i];
                f.insert(f.end(), train_set.attrs[i].begin(), train_set.attrs[i].end());
                feats.push_back(std::move(f));
            }
            for (std::size_t i = 0; i < test.size(); ++i) {
                Vector f = test.contexts[i];
                f.insert(f.end(), test.attrs[i].begin(), test.attrs[i].end());
                test_feats.push_back(std::move(f));
            }
            MlpClassifier baseline =
                train_mlp_classifier(feats, train_set.labels, 2, 16, tc);

            rows.push_back({frac, seed, test_error(model, test),
                            1.0 - baseline.accuracy(test_feats, test.labels)});
        }
    }
    return rows;
}

namespace {

std::vector<ConsistencyRow> consistency_sweep(const std::vector<double>& levels, bool noise_mode,
                                              std::uint64_t seed) {
    std::vector<ConsistencyRow> rows;
    const std::vector<std::uint64_t> rep_seeds{seed, seed + 101, seed + 202};
    for (double level : levels) {
        double cen_err = 0.0, surr_err = 0.0, fid = 0.0;
        for (std::uint64_t rep : rep_seeds) {
            SyntheticSpec spec;
            spec.per_context = 60;
            spec.seed = rep;
            Batch train_set = gen_xor_context(spec);
            Batch test = gen_xor_context(test_spec(spec));

            Rng noise_rng(rep + 9);
            if (noise_mode) {
                train_set.attrs = inject_noise(train_set.attrs, level, noise_rng);
                test.attrs = inject_noise(test.attrs, level, noise_rng);
            } else {
                Rng widen_rng(rep + 5);
                train_set.attrs = widen_attrs(train_set.attrs, 4, 0.8, widen_rng);
                test.attrs = widen_attrs(test.attrs, 4, 0.8, widen_rng);
                Rng sub_rng(rep + 13);
                auto [tr_sub, cols] = subsample_features(train_set.attrs, level, sub_rng);
                train_set.attrs = std::move(tr_sub);
                std::vector<Vector> te_sub;
                for (const auto& row : test.attrs) {
                    Vector r;
                    for (std::size_t c : cols) r.push_back(row[c]);
                    te_sub.push_back(std::move(r));
                }
                test.attrs = std::move(te_sub);
            }
            const std::size_t d_x = train_set.attrs[0].size();

            Rng init(rep ^ 0xabcdULL);
            CenModel model = CenModel::make_linear(4, d_x, 2, 2, {16}, init);
            TrainConfig tc;
            tc.learning_rate = 0.01;
            tc.max_epochs = 150;
            tc.patience = 30;
            tc.seed = rep;
            train(model, train_set, {}, tc);
            cen_err += test_error(model, test);

            // context-only baseline (never sees x, so corruption cannot move it)
            MlpClassifier ctx_baseline =
                train_mlp_classifier(train_set.contexts, train_set.labels, 2, 16, tc);

            PerturbationConfig pcfg;
            pcfg.samples = 200;
            pcfg.x_scale = 0.3;
            pcfg.kernel_width = 1.0;
            pcfg.ridge = 1e-6;
            pcfg.target = SurrogateTarget::ProbabilityMatch;

            Rng lime_rng(rep + 77);
            const std::size_t probe = std::min<std::size_t>(30, test.size());
            std::size_t surr_wrong = 0;
            double fid_sum = 0.0;
            for (std::size_t i = 0; i < probe; ++i) {
                const Vector& x0 = test.attrs[i];
                const Vector& c0 = test.contexts[i];
                // surrogate of the CEN, used as a predictor at the point
                auto cen_box = [&](const Vector& x, const Vector& c) {
                    return cen_forward(model, c, x).prediction[1];
                };
                LocalSurrogate s = fit_surrogate(cen_box, x0, c0, pcfg, lime_rng);
                const bool pred = s.intercept >= 0.5;
                if (pred != (test.labels[i] == 1)) ++surr_wrong;

                // fidelity of a local surrogate to the context-only baseline,
                // fit in the baseline's own input space: high regardless of
                // how corrupted x is, since the baseline never consumes x
                auto base_box = [&](const Vector& c, const Vector&) {
                    return ctx_baseline.predict(c)[1];
                };
                PerturbationConfig fid_cfg;
                fid_cfg.samples = 200;
                fid_cfg.x_scale = 0.1;
                fid_cfg.kernel_width = 0.25;
                fid_cfg.ridge = 1e-6;
                fid_cfg.target = SurrogateTarget::LogitMatch;
                LocalSurrogate sb = fit_surrogate(base_box, c0, {}, fid_cfg, lime_rng);
                fid_sum += sb.weighted_r2;
            }
            surr_err += static_cast<double>(surr_wrong) / static_cast<double>(probe);
            fid += fid_sum / static_cast<double>(probe);
        }
        const double inv = 1.0 / static_cast<double>(rep_seeds.size());
        rows.push_back({level, cen_err * inv, surr_err * inv, fid * inv});
    }
    return rows;
}

}  // namespace

std::vector<ConsistencyRow> noisy_features_sweep(const std::vector<double>& snrs,
                                                 std::uint64_t seed) {
    return consistency_sweep(snrs, true, seed);
}

std::vector<ConsistencyRow> incomplete_features_sweep(const std::vector<double>& fractions,
                                                      std::uint64_t seed) {
    return consistency_sweep(fractions, false, seed);
}

std::vector<EntropyRegRow> entropy_reg_sweep(const std::vector<double>& lambdas,
                                             const std::vector<std::uint64_t>& seeds) {
    std::vector<EntropyRegRow> rows;
    for (double lambda : lambdas) {
        for (std::uint64_t seed : seeds) {
            // tight blobs near the origin: the bias-only (spurious) solution is
            // the cheapest fit, so only the regularizer forces x-dependence
            SyntheticSpec spec;
            spec.class_pure = true;
            spec.seed = seed;
            spec.offset = 0.4;
            spec.noise = 0.1;
            XorRunConfig cfg;
            cfg.dict_size = 4;
            cfg.entropy_weight = lambda;
            cfg.train.seed = seed;
            cfg.train.learning_rate = 0.02;
            cfg.train.max_epochs = 400;
            cfg.train.patience = 400;  // early stopping tracks the plain NLL
            Batch train_set, test;
            CenModel model = train_xor_cen(spec, cfg, &train_set, &test);
            rows.push_back({lambda, seed, evaluate_accuracy(model, test),
                            entropy_estimate(model, train_set)});
        }
    }
    return rows;
}

std::vector<LimeRecoveryRow> lime_recovery(std::size_t num_points, std::size_t num_samples,
                                           std::uint64_t seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    XorRunConfig cfg;
    cfg.train.seed = seed;
    Batch train_set, test;
    CenModel model = train_xor_cen(spec, cfg, &train_set, &test);

    PerturbationConfig pcfg;
    pcfg.samples = num_samples;
    pcfg.x_scale = 0.3;
    pcfg.c_scale = 0.01;  // joint sampling, sharply concentrated in c
    pcfg.kernel_width = 1.0;
    pcfg.ridge = 1e-10;
    pcfg.target = SurrogateTarget::LogitMatch;

    auto box = [&](const Vector& x, const Vector& c) {
        return cen_forward(model, c, x).prediction[1];
    };

    Rng rng(seed + 1234);
    std::vector<LimeRecoveryRow> rows;
    const std::size_t n = std::min(num_points, test.size());
    for (std::size_t i = 0; i < n; ++i) {
        CenForward f = cen_forward(model, test.contexts[i], test.attrs[i]);
        LinearExplanation exp = model.linear_explanation(f.theta);
        // binary logit slope: row 1 minus row 0
        Vector star(model.attr_dim);
        for (std::size_t j = 0; j < model.attr_dim; ++j) {
            star[j] = exp.weights(1, j) - exp.weights(0, j);
        }
        LocalSurrogate s = fit_surrogate(box, test.attrs[i], test.contexts[i], pcfg, rng);
        const double denom = std::max(norm2(star), 1e-12);
        rows.push_back({i, norm2(sub(s.weights, star)) / denom, s.weighted_r2});
    }
    return rows;
}

FanoReport fano_experiment(std::uint64_t seed) {
    // same configuration as the regularized arm of entropy_reg_sweep
    SyntheticSpec spec;
    spec.class_pure = true;
    spec.seed = seed;
    spec.offset = 0.4;
    spec.noise = 0.1;
    XorRunConfig cfg;
    cfg.dict_size = 4;
    cfg.entropy_weight = 0.1;
    cfg.train.seed = seed;
    cfg.train.learning_rate = 0.02;
    cfg.train.max_epochs = 400;
    cfg.train.patience = 400;
    Batch train_set, test;
    CenModel model = train_xor_cen(spec, cfg, &train_set, &test);
    Rng rng(seed + 55);
    return fano_diagnostic(model, test, rng);
}

}  // namespace cen::experiments
