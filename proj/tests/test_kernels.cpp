#include <doctest.h>

#include <vector>

#include "cen/kernels.hpp"
#include "cen/rng.hpp"

using namespace cen;

namespace {

struct LaneGuard {
    kernels::Lane saved;
    LaneGuard() : saved(kernels::active_lane()) {}
    ~LaneGuard() { kernels::set_lane(saved); }
};

}  // namespace

TEST_CASE("scalar kernels basic values") {
    std::vector<double> a{1, 2, 3, 4, 5}, b{5, 4, 3, 2, 1};
    CHECK(kernels::scalar::dot(a.data(), b.data(), 5) == doctest::Approx(35.0));
    CHECK(kernels::scalar::sum(a.data(), 5) == doctest::Approx(15.0));
    CHECK(kernels::scalar::max(a.data(), 5) == doctest::Approx(5.0));
    kernels::scalar::axpy(2.0, a.data(), b.data(), 5);
    CHECK(b[0] == doctest::Approx(7.0));
    CHECK(b[4] == doctest::Approx(11.0));
}

TEST_CASE("simd lanes agree with the scalar reference") {
    const bool have_avx2 = [] {
        try {
            LaneGuard g;
            kernels::set_lane(kernels::Lane::Avx2);
            return true;
        } catch (...) {
            return false;
        }
    }();
    if (!have_avx2) return;  // nothing to compare on this host

    Rng rng(42);
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 64u, 129u}) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        LaneGuard guard;
        kernels::set_lane(kernels::Lane::Scalar);
        const double dot_s = kernels::dot(a.data(), b.data(), n);
        const double sum_s = kernels::sum(a.data(), n);
        const double max_s = kernels::max(a.data(), n);
        std::vector<double> axpy_s = b;
        kernels::axpy(0.37, a.data(), axpy_s.data(), n);
        std::vector<double> scale_s = a;
        kernels::scale(-1.75, scale_s.data(), n);

        kernels::set_lane(kernels::Lane::Avx2);
        CHECK(kernels::dot(a.data(), b.data(), n) == doctest::Approx(dot_s).epsilon(1e-12));
        CHECK(kernels::sum(a.data(), n) == doctest::Approx(sum_s).epsilon(1e-12));
        CHECK(kernels::max(a.data(), n) == max_s);  // max reorders but never rounds
        std::vector<double> axpy_v = b;
        kernels::axpy(0.37, a.data(), axpy_v.data(), n);
        std::vector<double> scale_v = a;
        kernels::scale(-1.75, scale_v.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            // FMA contraction may differ from mul+add in the last ulp
            CHECK(axpy_v[i] == doctest::Approx(axpy_s[i]).epsilon(1e-14));
            CHECK(scale_v[i] == scale_s[i]);
        }
    }
}
