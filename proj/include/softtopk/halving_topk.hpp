#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <utility>

#include "softtopk/softmax_kernels.hpp"
#include "softtopk/tape.hpp"
#include "softtopk/types.hpp"

namespace softtopk {

// Score assigned to padding rows: far below anything a real instance produces,
// so padded entries lose every pairing almost completely.
template <std::floating_point T>
inline constexpr T kPadScore = T(-1e6);

template <std::floating_point T>
struct PaddedInstance {
    Matrix<T> embeddings;
    Vector<T> scores;
    PadDescriptor pad;
};

template <std::floating_point T>
struct SortResult {
    Matrix<T> embeddings;
    Vector<T> scores;
    std::vector<std::size_t> perm;  // perm[i] = source index of sorted slot i
};

template <std::floating_point T>
struct RoundResult {
    Matrix<T> embeddings;
    Vector<T> scores;
    std::vector<std::pair<T, T>> pair_weights;
};

// Extends the instance to k * 2^R rows (minimal R >= 0) with zero-vector
// embeddings and kPadScore scores so the tournament always halves cleanly.
template <std::floating_point T>
PaddedInstance<T> pad_to_tournament(const Matrix<T>& embeddings, const Vector<T>& scores,
                                    std::size_t k) {
    const std::size_t n = embeddings.rows;
    require(scores.size() == n, "pad_to_tournament: score length != embedding rows");
    if (k < 1 || k > n)
        throw SizeError("pad_to_tournament requires 1 <= k <= n (got k=" + std::to_string(k) +
                        ", n=" + std::to_string(n) + ")");

    std::size_t padded = k;
    while (padded < n) padded *= 2;

    PaddedInstance<T> out{Matrix<T>(padded, embeddings.cols), Vector<T>(padded, kPadScore<T>),
                          PadDescriptor{n, padded}};
    std::copy(embeddings.data.begin(), embeddings.data.end(), out.embeddings.data.begin());
    std::copy(scores.begin(), scores.end(), out.scores.begin());
    return out;
}

// Stable descending sort by score; returns the permutation actually applied.
template <std::floating_point T>
SortResult<T> sort_by_score(const Matrix<T>& embeddings, const Vector<T>& scores) {
    const std::size_t n = embeddings.rows;
    require(scores.size() == n, "sort_by_score: score length != embedding rows");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    SortResult<T> out;
    out.embeddings = gather_rows(embeddings, perm);
    out.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.scores[i] = scores[perm[i]];
    out.perm = std::move(perm);
    return out;
}

// One tournament halving over an even-length, sorted-descending list: slot i
// plays slot len-1-i, the pair collapses into a single row/score blended by a
// boosted two-way softmax over the pair's scores.
template <std::floating_point T>
RoundResult<T> tournament_round(const Matrix<T>& embeddings, const Vector<T>& scores, T boost) {
    const std::size_t len = embeddings.rows;
    require(scores.size() == len, "tournament_round: score length != embedding rows");
    if (len < 2 || len % 2 != 0)
        throw SizeError("tournament_round requires an even row count >= 2 (got " +
                        std::to_string(len) + ")");
    if (!(boost > T(0)))
        throw ConfigError("tournament_round requires boost > 0");

    const std::size_t half = len / 2;
    RoundResult<T> out{Matrix<T>(half, embeddings.cols), Vector<T>(half), {}};
    out.pair_weights.reserve(half);
    for (std::size_t i = 0; i < half; ++i) {
        const std::size_t j = len - 1 - i;
        const auto [w0, w1] = boosted_softmax(scores[i], scores[j], boost);
        combine_pair(embeddings.row(i), embeddings.row(j), w0, w1, out.embeddings.row(i));
        out.scores[i] = scores[i] * w0 + scores[j] * w1;
        out.pair_weights.emplace_back(w0, w1);
    }
    return out;
}

// Successive halving: pad to k * 2^R, then R rounds of sort + tournament.
// The surviving k rows are the soft selection.
template <std::floating_point T>
SoftSelection<T> halving_forward(const Matrix<T>& embeddings, const Vector<T>& scores,
                                 std::size_t k, T boost) {
    auto padded = pad_to_tournament(embeddings, scores, k);
    if (!(boost > T(0))) throw ConfigError("halving_forward requires boost > 0");

    HalvingTape<T> tape;
    tape.k = k;
    tape.boost = boost;
    tape.pad = padded.pad;
    tape.padded_embeddings = padded.embeddings;

    Matrix<T> cur_e = std::move(padded.embeddings);
    Vector<T> cur_v = std::move(padded.scores);
    while (cur_e.rows > k) {
        HalvingRound<T> round;
        round.scores_before = cur_v;
        auto sorted = sort_by_score(cur_e, cur_v);
        auto next = tournament_round(sorted.embeddings, sorted.scores, boost);
        round.perm = std::move(sorted.perm);
        round.pair_weights = std::move(next.pair_weights);
        tape.rounds.push_back(std::move(round));
        cur_e = std::move(next.embeddings);
        cur_v = std::move(next.scores);
    }
    return {std::move(cur_e), Tape<T>(std::move(tape))};
}

// Reverse pass: the sort is a fixed permutation of the recorded forward run
// (straight-through), each pair combine is bilinear in (rows, weights), and
// the pair weights feed back into both scores through the boosted softmax.
// Gradients for padding rows are computed and then dropped.
template <std::floating_point T>
GradientPair<T> halving_backward(const HalvingTape<T>& tape, const Matrix<T>& upstream) {
    validate(tape);
    const std::size_t d = tape.padded_embeddings.cols;
    require(upstream.rows == tape.k && upstream.cols == d,
            "halving_backward: upstream gradient must be k x d");

    // Rebuild the per-round input embedding states from the recorded weights.
    const std::size_t rounds = tape.rounds.size();
    std::vector<Matrix<T>> states;
    states.reserve(rounds);
    states.push_back(tape.padded_embeddings);
    for (std::size_t r = 0; r + 1 < rounds; ++r) {
        const auto& round = tape.rounds[r];
        const Matrix<T> sorted = gather_rows(states.back(), round.perm);
        const std::size_t half = sorted.rows / 2;
        Matrix<T> next(half, d);
        for (std::size_t i = 0; i < half; ++i) {
            const auto [w0, w1] = round.pair_weights[i];
            combine_pair(sorted.row(i), sorted.row(sorted.rows - 1 - i), w0, w1, next.row(i));
        }
        states.push_back(std::move(next));
    }

    Matrix<T> de_cur = upstream;
    Vector<T> dv_cur(tape.k, T(0));
    for (std::size_t r = rounds; r-- > 0;) {
        const auto& round = tape.rounds[r];
        const std::size_t len = round.perm.size();
        const std::size_t half = len / 2;
        const Matrix<T> sorted_e = gather_rows(states[r], round.perm);
        Vector<T> sorted_v(len);
        for (std::size_t i = 0; i < len; ++i) sorted_v[i] = round.scores_before[round.perm[i]];

        Matrix<T> de_sorted(len, d);
        Vector<T> dv_sorted(len, T(0));
        for (std::size_t i = 0; i < half; ++i) {
            const std::size_t j = len - 1 - i;
            const auto [w0, w1] = round.pair_weights[i];
            const auto up_row = de_cur.row(i);
            auto gi = de_sorted.row(i);
            auto gj = de_sorted.row(j);
            T dw0 = dv_cur[i] * sorted_v[i];
            T dw1 = dv_cur[i] * sorted_v[j];
            for (std::size_t c = 0; c < d; ++c) {
                gi[c] += w0 * up_row[c];
                gj[c] += w1 * up_row[c];
                dw0 += up_row[c] * sorted_e(i, c);
                dw1 += up_row[c] * sorted_e(j, c);
            }
            dv_sorted[i] += w0 * dv_cur[i];
            dv_sorted[j] += w1 * dv_cur[i];
            const auto [da, db] = boosted_softmax_backward(sorted_v[i], sorted_v[j], tape.boost,
                                                           dw0 - dw1);
            dv_sorted[i] += da;
            dv_sorted[j] += db;
        }

        Matrix<T> de_prev(len, d);
        Vector<T> dv_prev(len);
        for (std::size_t i = 0; i < len; ++i) {
            const auto src = de_sorted.row(i);
            auto dst = de_prev.row(round.perm[i]);
            std::copy(src.begin(), src.end(), dst.begin());
            dv_prev[round.perm[i]] = dv_sorted[i];
        }
        de_cur = std::move(de_prev);
        dv_cur = std::move(dv_prev);
    }

    const std::size_t n = tape.pad.original_n;
    GradientPair<T> grad{Matrix<T>(n, d), Vector<T>(n)};
    std::copy(de_cur.data.begin(), de_cur.data.begin() + static_cast<std::ptrdiff_t>(n * d),
              grad.dE.data.begin());
    std::copy(dv_cur.begin(), dv_cur.begin() + static_cast<std::ptrdiff_t>(n), grad.dv.begin());
    return grad;
}

}  // namespace softtopk
