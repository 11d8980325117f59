#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "softtopk/halving_topk.hpp"
#include "softtopk/oracle_metrics.hpp"
#include "test_support.hpp"

using namespace softtopk;

namespace {

Matrix<double> from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix<double> m(rows.size(), rows.begin()->size());
    std::size_t i = 0;
    for (const auto& r : rows) {
        std::size_t j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

}  // namespace

TEST_CASE("padding extends to the next k * 2^R") {
    SplitMix64 rng(201);
    const auto e = test_support::rand_matrix(rng, 12, 3);
    const auto v = test_support::rand_scores(rng, 12);
    const auto padded = pad_to_tournament(e, v, 4);
    CHECK(padded.pad.original_n == 12);
    CHECK(padded.pad.padded_n == 16);
    CHECK(padded.embeddings.rows == 16);
    for (std::size_t i = 12; i < 16; ++i) {
        CHECK(padded.scores[i] == kPadScore<double>);
        for (std::size_t c = 0; c < 3; ++c) CHECK(padded.embeddings(i, c) == 0.0);
    }
    // original data is untouched
    CHECK(padded.scores[3] == v[3]);
    CHECK(padded.embeddings(7, 2) == e(7, 2));
}

TEST_CASE("k == n needs no padding and no rounds") {
    SplitMix64 rng(202);
    const auto e = test_support::rand_matrix(rng, 5, 2);
    const auto v = test_support::rand_scores(rng, 5);
    const auto sel = halving_forward(e, v, 5, 50.0);
    CHECK(sel.output == e);
    CHECK(std::get<HalvingTape<double>>(sel.tape).rounds.empty());
}

TEST_CASE("sort_by_score is a stable descending sort") {
    const auto e = from_rows({{1.0}, {2.0}, {3.0}});
    const Vector<double> v = {0.5, 0.9, 0.5};
    const auto sorted = sort_by_score(e, v);
    CHECK(sorted.perm == std::vector<std::size_t>{1, 0, 2});
    CHECK(sorted.scores == Vector<double>{0.9, 0.5, 0.5});
    CHECK(sorted.embeddings(0, 0) == 2.0);
    CHECK(sorted.embeddings(1, 0) == 1.0);
    CHECK(sorted.embeddings(2, 0) == 3.0);
}

TEST_CASE("tournament_round folds ranked opposites") {
    const auto e = from_rows({{1.0, 0.0}, {0.0, 1.0}});
    const Vector<double> v = {2.5, 0.75};
    const auto round = tournament_round(e, v, 0.7);
    REQUIRE(round.embeddings.rows == 1);
    const auto [w0, w1] = round.pair_weights[0];
    CHECK(w0 == doctest::Approx(0.7729422593967384).epsilon(1e-15));
    CHECK(w1 == doctest::Approx(0.22705774060326153).epsilon(1e-15));
    CHECK(round.embeddings(0, 0) == doctest::Approx(w0).epsilon(1e-15));
    CHECK(round.embeddings(0, 1) == doctest::Approx(w1).epsilon(1e-15));
    CHECK(round.scores[0] == doctest::Approx(2.5 * w0 + 0.75 * w1).epsilon(1e-15));

    CHECK_THROWS_AS(tournament_round(from_rows({{1.0}, {2.0}, {3.0}}), {0.3, 0.2, 0.1}, 1.0),
                    SizeError);
    CHECK_THROWS_AS(tournament_round(e, v, 0.0), ConfigError);
}

TEST_CASE("halving forward frozen worked example") {
    const auto e = from_rows({{1.0, 0.0}, {0.0, 1.0}, {2.0, -1.0}, {0.5, 0.5}});
    const Vector<double> v = {0.1, 0.8, 0.4, 0.6};
    const auto sel = halving_forward(e, v, 2, 2.0);
    REQUIRE(sel.output.rows == 2);
    CHECK(sel.output(0, 0) == doctest::Approx(0.19781611144141822).epsilon(1e-12));
    CHECK(sel.output(0, 1) == doctest::Approx(0.8021838885585818).epsilon(1e-12));
    CHECK(sel.output(1, 0) == doctest::Approx(1.1019685098313219).epsilon(1e-12));
    CHECK(sel.output(1, 1) == doctest::Approx(-0.101968509831322).epsilon(1e-12));
}

TEST_CASE("halving forward matches the scripted reference") {
    SplitMix64 rng(203);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 3 + (rng.next_u64() % 20);  // mostly non-powers of two
        const std::size_t k = 1 + (rng.next_u64() % n);
        const auto e = test_support::rand_matrix(rng, n, 4);
        const auto v = test_support::rand_scores(rng, n);
        const double boost = 0.5 + 20.0 * rng.next_unit();

        const auto got = halving_forward(e, v, k, boost).output;
        const auto [want, want_scores] = test_support::naive_halving(e, v, k, boost);
        CHECK(test_support::max_abs_diff(got, want) < 1e-11);
    }
}

TEST_CASE("round count follows the halving law") {
    SplitMix64 rng(204);
    const std::size_t cases[][3] = {{1000, 8, 7}, {16, 16, 0}, {17, 16, 1}, {4096, 2, 11},
                                    {24, 3, 3},   {9, 8, 1},   {128, 64, 1}};
    for (const auto& c : cases) {
        const auto e = test_support::rand_matrix(rng, c[0], 1);
        const auto v = test_support::rand_scores(rng, c[0]);
        const auto sel = halving_forward(e, v, c[1], 30.0);
        CHECK(std::get<HalvingTape<double>>(sel.tape).rounds.size() == c[2]);
    }
}

TEST_CASE("large boost recovers the exact selection on well-separated scores") {
    SplitMix64 rng(205);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t n = 20 + (rng.next_u64() % 100);
        const std::size_t k = 1 + (rng.next_u64() % 16);
        const auto e = test_support::rand_matrix(rng, n, 6);
        Vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i)  // spaced >= 0.01 apart, shuffled
            v[i] = static_cast<double>(i) * (0.01 + 0.01 * rng.next_unit());
        for (std::size_t i = n; i-- > 1;) std::swap(v[i], v[rng.next_u64() % (i + 1)]);

        const auto got = halving_forward(e, v, k, 1e4).output;
        const auto want = exact_topk(e, v, k);
        CHECK(test_support::max_abs_diff(got, want) < 1e-6);
    }
}

TEST_CASE("jointly permuting rows leaves the output unchanged") {
    SplitMix64 rng(206);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 5 + (rng.next_u64() % 30);
        const std::size_t k = 1 + (rng.next_u64() % (n - 1));  // k < n so a sort happens
        const auto e = test_support::rand_matrix(rng, n, 3);
        const auto v = test_support::rand_scores(rng, n);

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);
        Matrix<double> pe(n, 3);
        Vector<double> pv(n);
        for (std::size_t i = 0; i < n; ++i) {
            pv[i] = v[perm[i]];
            for (std::size_t c = 0; c < 3; ++c) pe(i, c) = e(perm[i], c);
        }

        const auto a = halving_forward(e, v, k, 40.0).output;
        const auto b = halving_forward(pe, pv, k, 40.0).output;
        CHECK(test_support::max_abs_diff(a, b) < 1e-9);
    }
}

TEST_CASE("all-ones embeddings stay all-ones (convex combination)") {
    SplitMix64 rng(207);
    for (const std::size_t n : {4ul, 10ul, 33ul}) {
        const Matrix<double> e(n, 3, 1.0);
        const auto v = test_support::rand_scores(rng, n);
        for (const double boost : {1e-3, 1.0, 100.0, 1e4}) {
            const auto out = halving_forward(e, v, 2, boost).output;
            for (double x : out.data) CHECK(std::abs(x - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("halving backward matches finite differences") {
    SplitMix64 rng(208);
    DiffOperator op{[](const Matrix<double>& e, const Vector<double>& v, std::size_t k) {
                        return halving_forward(e, v, k, 5.0);
                    },
                    [](const Tape<double>& tape, const Matrix<double>& up) {
                        return halving_backward(std::get<HalvingTape<double>>(tape), up);
                    }};
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t n = 5 + (rng.next_u64() % 10);
        const std::size_t k = 1 + (rng.next_u64() % 4);
        const auto e = test_support::rand_matrix(rng, n, 3);
        const auto v = test_support::rand_scores(rng, n);
        if (min_pairwise_gap(v) < 1e-4) continue;
        const auto probe = test_support::rand_matrix(rng, k, 3);
        const auto report = gradcheck_operator(op, e, v, k, probe, 1e-6, 1e-4);
        INFO(report.worst_coordinate);
        CHECK(report.pass);
    }
}

TEST_CASE("halving rejects bad arguments") {
    const auto e = from_rows({{1.0}, {2.0}});
    CHECK_THROWS_AS(halving_forward<double>(e, {0.1, 0.2}, 3, 10.0), SizeError);
    CHECK_THROWS_AS(halving_forward<double>(e, {0.1, 0.2}, 0, 10.0), SizeError);
    CHECK_THROWS_AS(halving_forward<double>(e, {0.1, 0.2}, 1, 0.0), ConfigError);
    CHECK_THROWS_AS(halving_forward<double>(e, {0.1, 0.2}, 1, -3.0), ConfigError);
    CHECK_THROWS_AS(halving_forward<double>(e, {0.1}, 1, 10.0), SizeError);

    const auto sel = halving_forward<double>(e, {0.1, 0.2}, 1, 10.0);
    const auto& tape = std::get<HalvingTape<double>>(sel.tape);
    CHECK_THROWS_AS(halving_backward(tape, Matrix<double>(2, 1)), SizeError);
    CHECK_THROWS_AS(halving_backward(tape, Matrix<double>(1, 2)), SizeError);
}

TEST_CASE("halving forward is deterministic") {
    SplitMix64 rng(209);
    const auto e = test_support::rand_matrix(rng, 13, 4);
    const auto v = test_support::rand_scores(rng, 13);
    const auto a = halving_forward(e, v, 4, 25.0);
    const auto b = halving_forward(e, v, 4, 25.0);
    CHECK(a.output == b.output);
}
