#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "softtopk/oracle_metrics.hpp"
#include "softtopk/softmax_kernels.hpp"
#include "test_support.hpp"

using namespace softtopk;

TEST_CASE("argmax_lowest picks the lowest index on ties") {
    CHECK(argmax_lowest<double>({1.0, 3.0, 3.0}) == 1);
    CHECK(argmax_lowest<double>({5.0}) == 0);
    CHECK(argmax_lowest<double>({-2.0, -1.0, -3.0}) == 1);
}

TEST_CASE("verbatim peaked softmax on [0, -1]") {
    const auto res = peaked_softmax_verbatim_full<double>({0.0, -1.0}, 1e-12);
    CHECK(res.amax == 0);
    CHECK(!res.clamped);
    // denom = exp(0) + exp(-1) - exp(0) = exp(-1), so out = [e, 1]
    CHECK(res.weights[0] == doctest::Approx(2.718281828459045).epsilon(1e-15));
    CHECK(res.weights[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("verbatim peaked softmax with a tied max") {
    const auto w = peaked_softmax_verbatim<double>({0.0, 0.0}, 1e-12);
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("verbatim peaked softmax clamps a vanishing denominator") {
    const auto res = peaked_softmax_verbatim_full<double>({0.0, -50.0}, 1e-12);
    CHECK(res.clamped);
    CHECK(res.weights[0] == doctest::Approx(1e12).epsilon(1e-15));
    CHECK(res.weights[1] == doctest::Approx(1.928749847963918e-10).epsilon(1e-13));
}

TEST_CASE("verbatim peaked softmax needs at least two entries") {
    CHECK_THROWS_AS(peaked_softmax_verbatim<double>({0.0}, 1e-12), SizeError);
}

TEST_CASE("verbatim weights are unnormalized with the max on top") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Vector<double> x(6);
        for (auto& v : x) v = -3.0 * rng.next_unit();
        const auto res = peaked_softmax_verbatim_full(x, 1e-12);
        double sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sum += res.weights[i];
            CHECK(res.weights[i] <= res.weights[res.amax]);
        }
        CHECK(sum > 1.0);  // total is (denom + exp(max)) / denom > 1
    }
}

TEST_CASE("verbatim vjp matches finite differences") {
    SplitMix64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 5;
        Vector<double> x(n), probe(n);
        for (auto& v : x) v = -2.5 * rng.next_unit();
        for (auto& v : probe) v = rng.next_signed_unit();
        if (min_pairwise_gap(x) < 1e-4) continue;

        const auto res = peaked_softmax_verbatim_full(x, 1e-12);
        const Vector<double> dx = peaked_softmax_verbatim_vjp(res.weights, res.amax, res.clamped, probe);

        const auto loss = [&](const Vector<double>& xx) {
            const auto w = peaked_softmax_verbatim(xx, 1e-12);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += probe[i] * w[i];
            return acc;
        };
        const Vector<double> fd = finite_diff_grad(loss, x, 1e-7);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(dx[i] == doctest::Approx(fd[i]).epsilon(1e-5));
    }
}

TEST_CASE("verbatim vjp in the clamped regime is diagonal") {
    const Vector<double> x = {0.0, -50.0, -60.0};
    const auto res = peaked_softmax_verbatim_full(x, 1e-12);
    REQUIRE(res.clamped);
    const Vector<double> probe = {0.3, -0.7, 1.1};
    const Vector<double> dx = peaked_softmax_verbatim_vjp(res.weights, res.amax, res.clamped, probe);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(dx[i] == doctest::Approx(probe[i] * res.weights[i]).epsilon(1e-14));

    const auto loss = [&](const Vector<double>& xx) {
        const auto w = peaked_softmax_verbatim(xx, 1e-12);
        return probe[0] * w[0] + probe[1] * w[1] + probe[2] * w[2];
    };
    const Vector<double> fd = finite_diff_grad(loss, x, 1e-8);
    // only the max coordinate has non-negligible scale: 0.3 * 1e12
    CHECK(dx[0] == doctest::Approx(fd[0]).epsilon(1e-6));
}

TEST_CASE("normalized peaked softmax frozen example") {
    const auto w = peaked_softmax_normalized<double>({0.5, 0.0, -0.5}, 2.0);
    CHECK(w[0] == doctest::Approx(0.6652409557748218).epsilon(1e-14));
    CHECK(w[1] == doctest::Approx(0.24472847105479764).epsilon(1e-14));
    CHECK(w[2] == doctest::Approx(0.09003057317038046).epsilon(1e-14));
}

TEST_CASE("normalized peaked softmax sums to one") {
    SplitMix64 rng(31);
    Vector<double> x(4000);
    for (auto& v : x) v = -rng.next_unit();
    const auto w = peaked_softmax_normalized(x, 50.0);
    double sum = 0.0;
    for (double v : w) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
    CHECK_THROWS_AS(peaked_softmax_normalized<double>({}, 1.0), SizeError);
}

TEST_CASE("normalized vjp matches finite differences") {
    SplitMix64 rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 6;
        Vector<double> x(n), probe(n);
        for (auto& v : x) v = rng.next_signed_unit();
        for (auto& v : probe) v = rng.next_signed_unit();

        const auto w = peaked_softmax_normalized(x, 3.0);
        const Vector<double> dx = peaked_softmax_normalized_vjp(w, 3.0, probe);
        const auto loss = [&](const Vector<double>& xx) {
            const auto ww = peaked_softmax_normalized(xx, 3.0);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += probe[i] * ww[i];
            return acc;
        };
        const Vector<double> fd = finite_diff_grad(loss, x, 1e-6);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(dx[i] == doctest::Approx(fd[i]).epsilon(1e-6));
    }
}

TEST_CASE("boosted softmax frozen example and basic shape") {
    const auto [w0, w1] = boosted_softmax(0.75, 2.5, 0.7);
    CHECK(w0 == doctest::Approx(0.22705774060326153).epsilon(1e-15));
    CHECK(w1 == doctest::Approx(0.7729422593967384).epsilon(1e-15));

    const auto [e0, e1] = boosted_softmax(1.0, 1.0, 123.0);
    CHECK(e0 == 0.5);
    CHECK(e1 == 0.5);
}

TEST_CASE("boosted softmax weights always sum to exactly one") {
    SplitMix64 rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const double a = rng.next_signed_unit() * 10;
        const double b = rng.next_signed_unit() * 10;
        const double c = 0.1 + 200.0 * rng.next_unit();
        const auto [w0, w1] = boosted_softmax(a, b, c);
        CHECK(w0 + w1 == 1.0);
        CHECK(w0 >= 0.0);
        CHECK(w1 >= 0.0);
    }
}

TEST_CASE("boosted softmax saturates without overflow") {
    const auto [w0, w1] = boosted_softmax(0.0, -1.0, 80.0);
    CHECK(w0 == 1.0);
    CHECK(w1 == 0.0);
    const auto [l0, l1] = boosted_softmax(0.0, 1e8, 100.0);
    CHECK(l0 == 0.0);
    CHECK(l1 == 1.0);
}

TEST_CASE("boosted softmax backward matches finite differences") {
    const auto [da_sym, db_sym] = boosted_softmax_backward(1.0, 1.0, 2.0, 1.0);
    CHECK(da_sym == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(db_sym == doctest::Approx(-0.5).epsilon(1e-15));

    SplitMix64 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = rng.next_signed_unit();
        const double b = rng.next_signed_unit();
        const double c = 0.5 + 5.0 * rng.next_unit();
        const double p = rng.next_signed_unit();  // upstream dL/dw0
        const double q = rng.next_signed_unit();  // upstream dL/dw1
        const auto [da, db] = boosted_softmax_backward(a, b, c, p - q);

        const auto loss = [&](const Vector<double>& x) {
            const auto [w0, w1] = boosted_softmax(x[0], x[1], c);
            return p * w0 + q * w1;
        };
        const Vector<double> fd = finite_diff_grad(loss, {a, b}, 1e-7);
        CHECK(da == doctest::Approx(fd[0]).epsilon(1e-6));
        CHECK(db == doctest::Approx(fd[1]).epsilon(1e-6));
    }
}
