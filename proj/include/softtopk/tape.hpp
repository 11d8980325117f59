#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

#include "softtopk/rng.hpp"
#include "softtopk/types.hpp"

namespace softtopk {

// --- shared combination helpers -------------------------------------------
// Forward, replay, and backward all route row combinations through these two
// functions so a replayed tape reproduces the forward output bit-for-bit.

/// out_row += is implicit zero; computes sum_l weights[l] * E.row(l).
template <std::floating_point T>
void weighted_row_sum(const Vector<T>& weights, const Matrix<T>& embeddings, std::span<T> out_row) {
    for (auto& c : out_row) c = T(0);
    for (std::size_t l = 0; l < embeddings.rows; ++l) {
        const T w = weights[l];
        const auto row = embeddings.row(l);
        for (std::size_t c = 0; c < row.size(); ++c) out_row[c] += w * row[c];
    }
}

template <std::floating_point T>
void combine_pair(std::span<const T> row_i, std::span<const T> row_j, T w0, T w1, std::span<T> out) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = w0 * row_i[c] + w1 * row_j[c];
}

template <std::floating_point T>
Matrix<T> gather_rows(const Matrix<T>& m, const std::vector<std::size_t>& perm) {
    Matrix<T> out(perm.size(), m.cols);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const auto src = m.row(perm[i]);
        auto dst = out.row(i);
        for (std::size_t c = 0; c < m.cols; ++c) dst[c] = src[c];
    }
    return out;
}

// --- iterative tape --------------------------------------------------------

template <std::floating_point T>
struct IterativeStep {
    Vector<T> weights;         // p_i over all n candidates
    std::size_t masked_index;  // argmax masked after this step
    T pre_mask_max;            // max score seen by this step
    bool clamped;              // verbatim eps clamp was active
};

template <std::floating_point T>
struct IterativeTape {
    std::size_t k = 0;
    PeakedMode mode = PeakedMode::verbatim;
    T eps = T(1e-12);
    T alpha = T(50);
    T mask_value = T(-10000);
    Matrix<T> embeddings;  // forward input E
    Vector<T> scores;      // forward input v (pre-masking)
    std::vector<IterativeStep<T>> steps;
};

template <std::floating_point T>
void validate(const IterativeTape<T>& tape) {
    const std::size_t n = tape.embeddings.rows;
    if (tape.k < 1 || tape.k > n) throw IntegrityError("iterative tape: k out of range");
    if (tape.scores.size() != n) throw IntegrityError("iterative tape: score length != rows");
    if (tape.embeddings.data.size() != n * tape.embeddings.cols)
        throw IntegrityError("iterative tape: embedding storage size mismatch");
    if (tape.steps.size() != tape.k) throw IntegrityError("iterative tape: step count != k");
    std::vector<bool> seen(n, false);
    for (const auto& step : tape.steps) {
        if (step.weights.size() != n) throw IntegrityError("iterative tape: weight length != n");
        if (step.masked_index >= n) throw IntegrityError("iterative tape: masked index out of range");
        if (seen[step.masked_index]) throw IntegrityError("iterative tape: masked index repeated");
        seen[step.masked_index] = true;
        if (!std::isfinite(static_cast<double>(step.pre_mask_max)))
            throw IntegrityError("iterative tape: non-finite recorded max");
    }
}

// --- halving tape ----------------------------------------------------------

struct PadDescriptor {
    std::size_t original_n = 0;
    std::size_t padded_n = 0;
};

template <std::floating_point T>
struct HalvingRound {
    std::vector<std::size_t> perm;            // sorted[i] = input[perm[i]]
    std::vector<std::pair<T, T>> pair_weights;  // (w0, w1) per pair, i paired with len-1-i
    Vector<T> scores_before;                  // scores entering this round, pre-sort
};

template <std::floating_point T>
struct HalvingTape {
    std::size_t k = 0;
    T boost = T(100);
    PadDescriptor pad;
    Matrix<T> padded_embeddings;  // round-0 input including pad rows
    std::vector<HalvingRound<T>> rounds;
};

template <std::floating_point T>
void validate(const HalvingTape<T>& tape) {
    if (tape.k < 1) throw IntegrityError("halving tape: k < 1");
    const std::size_t rounds = tape.rounds.size();
    if (tape.pad.padded_n != (tape.k << rounds))
        throw IntegrityError("halving tape: padded size is not k * 2^rounds");
    if (tape.pad.original_n < 1 || tape.pad.original_n > tape.pad.padded_n)
        throw IntegrityError("halving tape: original size outside padded size");
    if (tape.padded_embeddings.rows != tape.pad.padded_n)
        throw IntegrityError("halving tape: embedding rows != padded size");
    std::size_t len = tape.pad.padded_n;
    for (const auto& round : tape.rounds) {
        if (round.perm.size() != len) throw IntegrityError("halving tape: permutation length mismatch");
        std::vector<bool> seen(len, false);
        for (std::size_t p : round.perm) {
            if (p >= len || seen[p]) throw IntegrityError("halving tape: invalid permutation");
            seen[p] = true;
        }
        if (round.pair_weights.size() != len / 2)
            throw IntegrityError("halving tape: pair count mismatch");
        if (round.scores_before.size() != len)
            throw IntegrityError("halving tape: score snapshot length mismatch");
        len /= 2;
    }
    if (len != tape.k) throw IntegrityError("halving tape: rounds do not reduce to k");
}

// --- selection + replay ----------------------------------------------------

template <std::floating_point T>
using Tape = std::variant<IterativeTape<T>, HalvingTape<T>>;

/// Forward output together with the record needed to run backward.
template <std::floating_point T>
struct SoftSelection {
    Matrix<T> output;  // k x d
    Tape<T> tape;
};

template <std::floating_point T>
Matrix<T> replay(const IterativeTape<T>& tape) {
    validate(tape);
    Matrix<T> out(tape.k, tape.embeddings.cols);
    for (std::size_t i = 0; i < tape.k; ++i)
        weighted_row_sum(tape.steps[i].weights, tape.embeddings, out.row(i));
    return out;
}

template <std::floating_point T>
Matrix<T> replay(const HalvingTape<T>& tape) {
    validate(tape);
    Matrix<T> current = tape.padded_embeddings;
    for (const auto& round : tape.rounds) {
        Matrix<T> sorted = gather_rows(current, round.perm);
        const std::size_t half = sorted.rows / 2;
        Matrix<T> next(half, sorted.cols);
        for (std::size_t i = 0; i < half; ++i) {
            const std::size_t j = sorted.rows - 1 - i;
            combine_pair<T>(sorted.row(i), sorted.row(j), round.pair_weights[i].first,
                            round.pair_weights[i].second, next.row(i));
        }
        current = std::move(next);
    }
    return current;
}

template <std::floating_point T>
Matrix<T> replay(const Tape<T>& tape) {
    return std::visit([](const auto& t) { return replay(t); }, tape);
}

/// Replay entry of the iterative operator; rejects tapes of any other kind.
template <std::floating_point T>
Matrix<T> iterative_replay(const Tape<T>& tape) {
    const auto* t = std::get_if<IterativeTape<T>>(&tape);
    if (!t) throw IntegrityError("iterative replay: tape was not produced by the iterative operator");
    return replay(*t);
}

/// Replay entry of the halving operator; rejects tapes of any other kind.
template <std::floating_point T>
Matrix<T> halving_replay(const Tape<T>& tape) {
    const auto* t = std::get_if<HalvingTape<T>>(&tape);
    if (!t) throw IntegrityError("halving replay: tape was not produced by the halving operator");
    return replay(*t);
}

}  // namespace softtopk
