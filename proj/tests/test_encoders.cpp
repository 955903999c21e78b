#include <doctest.h>

#include <cmath>

#include "cen/encoders.hpp"
#include "cen/numeric.hpp"
#include "test_util.hpp"

using namespace cen;

TEST_CASE("mlp forward matches a hand-built two-layer net") {
    Rng rng(1);
    MlpEncoder enc = MlpEncoder::init({2, 3, 2}, rng);
    // overwrite with known parameters
    enc.weights()[0] = Matrix(3, 2, {1.0, 0.0, 0.0, 1.0, -1.0, -1.0});
    enc.biases()[0] = {0.0, 0.0, 0.5};
    enc.weights()[1] = Matrix(2, 3, {1.0, 1.0, 1.0, 0.0, -1.0, 2.0});
    enc.biases()[1] = {0.0, 1.0};

    Vector out = enc.forward({1.0, 2.0});
    // hidden pre-act: [1, 2, -2.5] -> ReLU [1, 2, 0]
    CHECK(out[0] == doctest::Approx(3.0));
    CHECK(out[1] == doctest::Approx(-1.0));
}

TEST_CASE("mlp params round-trip through get/set") {
    Rng rng(3);
    MlpEncoder enc = MlpEncoder::init({4, 8, 5}, rng);
    Vector flat(enc.param_count());
    enc.get_params(flat.data());
    MlpEncoder other = MlpEncoder::init({4, 8, 5}, rng);
    other.set_params(flat.data());
    Vector c = testutil::random_vector(4, rng);
    Vector a = enc.forward(c), b = other.forward(c);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("mlp backward matches finite differences") {
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        MlpEncoder enc = MlpEncoder::init({3, 5, 4, 2}, rng);
        Vector c = testutil::random_vector(3, rng);
        Vector d_out = testutil::random_vector(2, rng);

        MlpEncoder::Cache cache;
        enc.forward(c, &cache);
        // skip instances sitting on a ReLU kink (preact ~ 0, e.g. a unit whose
        // inputs are all dead and whose bias is zero): the subgradient and the
        // central difference legitimately disagree there
        bool on_kink = false;
        for (std::size_t l = 0; l + 1 < cache.preacts.size(); ++l) {
            for (double z : cache.preacts[l]) {
                if (std::abs(z) < 1e-4) on_kink = true;
            }
        }
        if (on_kink) continue;
        MlpEncoder grads = enc.zeros_like();
        Vector d_in = enc.backward(cache, d_out, grads);

        Vector p(enc.param_count());
        enc.get_params(p.data());
        auto loss = [&](const Vector& q) {
            MlpEncoder e2 = enc;
            e2.set_params(q.data());
            return dot(e2.forward(c), d_out);
        };
        Vector fd = fd_gradient(loss, p);
        Vector an(enc.param_count());
        grads.get_params(an.data());
        CHECK(max_rel_err(an, fd) < 1e-5);

        auto loss_in = [&](const Vector& ci) { return dot(enc.forward(ci), d_out); };
        Vector fd_in = fd_gradient(loss_in, c);
        CHECK(max_rel_err(d_in, fd_in) < 1e-5);
    }
}

TEST_CASE("mlp dropout is inverted and off at eval") {
    Rng rng(9);
    MlpEncoder enc = MlpEncoder::init({4, 64, 3}, rng, 0.5);
    Vector c = testutil::random_vector(4, rng);
    Vector eval1 = enc.forward(c);
    Vector eval2 = enc.forward(c);
    for (std::size_t i = 0; i < eval1.size(); ++i) CHECK(eval1[i] == eval2[i]);

    // train-mode outputs average back toward the eval output
    Vector mean(3, 0.0);
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
        MlpEncoder::Cache cache;
        Vector o = enc.forward(c, &cache, true, &rng);
        for (std::size_t i = 0; i < 3; ++i) mean[i] += o[i] / reps;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(mean[i] == doctest::Approx(eval1[i]).epsilon(0.15));
    }
}

TEST_CASE("mlp dropout backward matches finite differences given a fixed mask") {
    Rng rng(31);
    MlpEncoder enc = MlpEncoder::init({3, 6, 2}, rng, 0.4);
    Vector c = testutil::random_vector(3, rng);
    Vector d_out = testutil::random_vector(2, rng);

    MlpEncoder::Cache cache;
    Rng mask_rng(555);
    enc.forward(c, &cache, true, &mask_rng);
    MlpEncoder grads = enc.zeros_like();
    enc.backward(cache, d_out, grads);

    // replay with the same mask by reusing the seed
    Vector p(enc.param_count());
    enc.get_params(p.data());
    auto loss = [&](const Vector& q) {
        MlpEncoder e2 = enc;
        e2.set_params(q.data());
        MlpEncoder::Cache c2;
        Rng r2(555);
        return dot(e2.forward(c, &c2, true, &r2), d_out);
    };
    Vector fd = fd_gradient(loss, p);
    Vector an(enc.param_count());
    grads.get_params(an.data());
    CHECK(max_rel_err(an, fd) < 1e-5);
}

TEST_CASE("recurrent encoder shapes and determinism") {
    Rng rng(5);
    RecurrentEncoder enc = RecurrentEncoder::init(4, 6, 3, rng);
    Vector c = testutil::random_vector(4, rng);
    auto logits = enc.forward(c, 5);
    CHECK(logits.size() == 5);
    for (const auto& l : logits) CHECK(l.size() == 3);
    auto again = enc.forward(c, 5);
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t k = 0; k < 3; ++k) CHECK(logits[t][k] == again[t][k]);
}

TEST_CASE("recurrent backward matches finite differences") {
    Rng rng(23);
    for (int trial = 0; trial < 15; ++trial) {
        RecurrentEncoder enc = RecurrentEncoder::init(3, 4, 2, rng);
        Vector c = testutil::random_vector(3, rng);
        const std::size_t steps = 1 + trial % 4;
        std::vector<Vector> d_logits(steps);
        for (auto& d : d_logits) d = testutil::random_vector(2, rng);

        RecurrentEncoder::Cache cache;
        enc.forward(c, steps, &cache);
        RecurrentEncoder grads = enc.zeros_like();
        Vector d_in = enc.backward(cache, d_logits, grads);

        Vector p(enc.param_count());
        enc.get_params(p.data());
        auto loss = [&](const Vector& q) {
            RecurrentEncoder e2 = enc;
            e2.set_params(q.data());
            auto out = e2.forward(c, steps);
            double s = 0.0;
            for (std::size_t t = 0; t < steps; ++t) s += dot(out[t], d_logits[t]);
            return s;
        };
        Vector fd = fd_gradient(loss, p);
        Vector an(enc.param_count());
        grads.get_params(an.data());
        CHECK(max_rel_err(an, fd) < 1e-5);

        auto loss_in = [&](const Vector& ci) {
            auto out = enc.forward(ci, steps);
            double s = 0.0;
            for (std::size_t t = 0; t < steps; ++t) s += dot(out[t], d_logits[t]);
            return s;
        };
        Vector fd_in = fd_gradient(loss_in, c);
        CHECK(max_rel_err(d_in, fd_in) < 1e-5);
    }
}

TEST_CASE("attention compose is the convex combination of atoms") {
    Matrix dict(2, 3, {1.0, 0.0, 2.0, 3.0, 4.0, 0.0});
    Vector theta = attention_compose({0.25, 0.75}, dict);
    CHECK(theta[0] == doctest::Approx(0.25 * 1 + 0.75 * 3));
    CHECK(theta[1] == doctest::Approx(0.75 * 4));
    CHECK(theta[2] == doctest::Approx(0.5));

    // one-hot attention selects an atom exactly
    Vector t0 = attention_compose({1.0, 0.0}, dict);
    for (std::size_t i = 0; i < 3; ++i) CHECK(t0[i] == dict(0, i));
}

TEST_CASE("attention compose rejects off-simplex weights") {
    Matrix dict(2, 2, {1.0, 0.0, 0.0, 1.0});
    CHECK_THROWS_AS(attention_compose({0.5, 0.6}, dict), InvalidInput);
    CHECK_THROWS_AS(attention_compose({1.5, -0.5}, dict), InvalidInput);
    CHECK_THROWS_AS(attention_compose({0.5, 0.5, 0.0}, dict), InvalidInput);
}

TEST_CASE("attention compose backward matches finite differences") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 2 + trial % 3, d = 4;
        Matrix dict = testutil::random_matrix(k, d, rng);
        Vector alpha = softmax(testutil::random_vector(k, rng));
        Vector d_theta = testutil::random_vector(d, rng);

        Matrix d_dict(k, d);
        Vector d_alpha = attention_compose_backward(alpha, dict, d_theta, d_dict);

        auto loss_alpha = [&](const Vector& a) {
            Vector a2 = a;
            // renormalization-free probe: evaluate the bilinear form directly
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j)
                for (std::size_t i = 0; i < d; ++i) s += a2[j] * dict(j, i) * d_theta[i];
            return s;
        };
        Vector fd_a = fd_gradient(loss_alpha, alpha);
        CHECK(max_rel_err(d_alpha, fd_a) < 1e-6);

        Vector dict_flat = dict.values();
        auto loss_dict = [&](const Vector& f) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j)
                for (std::size_t i = 0; i < d; ++i) s += alpha[j] * f[j * d + i] * d_theta[i];
            return s;
        };
        Vector fd_d = fd_gradient(loss_dict, dict_flat);
        Vector an_d = d_dict.values();
        CHECK(max_rel_err(an_d, fd_d) < 1e-6);
    }
}

TEST_CASE("softmax backward matches finite differences") {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        Vector logits = testutil::random_vector(4, rng, 2.0);
        Vector d_alpha = testutil::random_vector(4, rng);
        Vector alpha = softmax(logits);
        Vector d_logits = softmax_backward(alpha, d_alpha);
        auto loss = [&](const Vector& l) { return dot(softmax(l), d_alpha); };
        Vector fd = fd_gradient(loss, logits);
        CHECK(max_rel_err(d_logits, fd) < 1e-5);
    }
}

TEST_CASE("recurrent_unroll produces simplex attention at every step") {
    Rng rng(13);
    RecurrentEncoder enc = RecurrentEncoder::init(3, 5, 4, rng);
    Vector c = testutil::random_vector(3, rng);
    auto alphas = recurrent_unroll(enc, c, 6);
    CHECK(alphas.size() == 6);
    for (const auto& a : alphas) {
        double s = 0.0;
        for (double x : a) {
            CHECK(x >= 0.0);
            s += x;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}
