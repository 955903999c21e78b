#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "cen/checkpoint.hpp"
#include "test_util.hpp"

using namespace cen;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const char* name) : path(std::string("ckpt_test_") + name + ".json") {}
    ~TempFile() { std::remove(path.c_str()); }
};

void check_same_outputs(const CenModel& a, const CenModel& b, Rng& rng) {
    REQUIRE(a.param_count() == b.param_count());
    Vector pa = a.get_params(), pb = b.get_params();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
    const std::size_t dc = a.encoder_kind == EncoderKind::Mlp ? a.mlp.input_dim()
                                                              : a.rnn.input_dim();
    for (int trial = 0; trial < 5; ++trial) {
        Vector c = testutil::random_vector(dc, rng);
        Vector x = testutil::random_vector(a.attr_dim, rng);
        auto fa = cen_forward(a, c, x);
        auto fb = cen_forward(b, c, x);
        REQUIRE(fa.prediction.size() == fb.prediction.size());
        for (std::size_t i = 0; i < fa.prediction.size(); ++i)
            CHECK(fa.prediction[i] == fb.prediction[i]);
    }
}

}  // namespace

TEST_CASE("linear mlp checkpoint round-trips bit-exactly") {
    Rng rng(1);
    RegConfig reg;
    reg.l2_theta = 0.01;
    reg.entropy_weight = 0.1;
    CenModel model = CenModel::make_linear(3, 2, 2, 4, {8, 6}, rng, reg);
    TempFile f("linear");
    save_checkpoint(model, f.path);
    CenModel back = load_checkpoint(f.path);
    CHECK(back.family == Family::Linear);
    CHECK(back.reg.l2_theta == model.reg.l2_theta);
    CHECK(back.reg.entropy_weight == model.reg.entropy_weight);
    check_same_outputs(model, back, rng);
}

TEST_CASE("unconstrained checkpoint round-trips") {
    Rng rng(2);
    CenModel model = CenModel::make_linear_unconstrained(4, 3, 3, {6}, rng);
    TempFile f("unconstrained");
    save_checkpoint(model, f.path);
    CenModel back = load_checkpoint(f.path);
    CHECK(!back.dictionary.has_value());
    check_same_outputs(model, back, rng);
}

TEST_CASE("survival recurrent checkpoint round-trips") {
    Rng rng(3);
    CenModel model = CenModel::make_survival_recurrent(3, 2, 4, 3, 5, rng);
    TempFile f("survival");
    save_checkpoint(model, f.path);
    CenModel back = load_checkpoint(f.path);
    CHECK(back.family == Family::SurvivalCrf);
    CHECK(back.intervals == 4);
    check_same_outputs(model, back, rng);
}

TEST_CASE("checkpoint file carries a format version") {
    Rng rng(4);
    CenModel model = CenModel::make_linear(2, 2, 2, 2, {4}, rng);
    TempFile f("version");
    save_checkpoint(model, f.path);
    std::ifstream in(f.path);
    nlohmann::json j;
    in >> j;
    CHECK(j.at("format_version").get<int>() == kCheckpointVersion);
}

TEST_CASE("loading rejects a bad version or a missing file") {
    CHECK_THROWS_AS(load_checkpoint("ckpt_test_missing_file.json"), Error);

    Rng rng(5);
    CenModel model = CenModel::make_linear(2, 2, 2, 2, {4}, rng);
    TempFile f("badversion");
    save_checkpoint(model, f.path);
    nlohmann::json j;
    {
        std::ifstream in(f.path);
        in >> j;
    }
    j["format_version"] = 999;
    {
        std::ofstream out(f.path);
        out << j;
    }
    CHECK_THROWS_AS(load_checkpoint(f.path), Error);
}
