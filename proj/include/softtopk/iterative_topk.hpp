#pragma once

#include <cmath>
#include <cstddef>

#include "softtopk/softmax_kernels.hpp"
#include "softtopk/tape.hpp"
#include "softtopk/types.hpp"

namespace softtopk {

template <std::floating_point T>
struct IterativeOptions {
    PeakedMode mode = PeakedMode::verbatim;
    T eps = T(1e-12);         // verbatim denominator floor
    T alpha = T(50);          // normalized-mode sharpness
    T mask_value = T(-10000);
};

namespace detail {

template <std::floating_point T>
T dot(std::span<const T> a, std::span<const T> b) {
    T s = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

// k-step soft selection: each step peaks a weight distribution around the
// current score maximum, emits the weighted combination of all rows, then
// masks the maximum out with a large negative constant so later steps ignore
// it.  Ties on the maximum resolve to the lowest index.
template <std::floating_point T>
SoftSelection<T> iterative_forward(const Matrix<T>& embeddings, const Vector<T>& scores,
                                   std::size_t k, const IterativeOptions<T>& opts = {}) {
    const std::size_t n = embeddings.rows;
    require(scores.size() == n, "iterative_forward: score length != embedding rows");
    if (k < 1 || k > n)
        throw SizeError("iterative_forward requires 1 <= k <= n (got k=" + std::to_string(k) +
                        ", n=" + std::to_string(n) + ")");
    if (opts.mode == PeakedMode::verbatim && n < 2)
        throw SizeError("iterative_forward in verbatim mode requires n >= 2");

    IterativeTape<T> tape;
    tape.k = k;
    tape.mode = opts.mode;
    tape.eps = opts.eps;
    tape.alpha = opts.alpha;
    tape.mask_value = opts.mask_value;
    tape.embeddings = embeddings;
    tape.scores = scores;
    tape.steps.reserve(k);

    Matrix<T> output(k, embeddings.cols);
    Vector<T> work = scores;
    Vector<T> peaked(n);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t a = argmax_lowest(work);
        const T m = work[a];
        for (std::size_t l = 0; l < n; ++l) {
            const T diff = work[l] - m;
            peaked[l] = -diff * diff;
        }
        IterativeStep<T> step;
        step.masked_index = a;
        step.pre_mask_max = m;
        if (opts.mode == PeakedMode::verbatim) {
            auto res = peaked_softmax_verbatim_full(peaked, opts.eps);
            step.weights = std::move(res.weights);
            step.clamped = res.clamped;
        } else {
            step.weights = peaked_softmax_normalized(peaked, opts.alpha);
            step.clamped = false;
        }
        weighted_row_sum(step.weights, embeddings, output.row(i));
        work[a] = opts.mask_value;
        tape.steps.push_back(std::move(step));
    }
    return {std::move(output), Tape<T>(std::move(tape))};
}

// Reverse pass over the recorded steps.  Per step the chain runs through the
// emitted row (linear in E and in p), the peaking transform x = -(v - m)^2,
// and the max via its subgradient at the recorded argmax.  The mask write is
// a constant assignment: gradient arriving at a masked slot from later steps
// is dropped before this step's own contribution is added.
template <std::floating_point T>
GradientPair<T> iterative_backward(const IterativeTape<T>& tape, const Matrix<T>& upstream) {
    validate(tape);
    const std::size_t n = tape.embeddings.rows;
    const std::size_t d = tape.embeddings.cols;
    require(upstream.rows == tape.k && upstream.cols == d,
            "iterative_backward: upstream gradient must be k x d");

    GradientPair<T> grad{Matrix<T>(n, d), Vector<T>(n, T(0))};

    // State entering the last step: all earlier argmaxes already masked.
    Vector<T> state = tape.scores;
    for (std::size_t i = 0; i + 1 < tape.k; ++i)
        state[tape.steps[i].masked_index] = tape.mask_value;

    Vector<T> dweights(n);
    for (std::size_t i = tape.k; i-- > 0;) {
        const auto& step = tape.steps[i];
        const auto up_row = upstream.row(i);

        grad.dv[step.masked_index] = T(0);  // undo the constant mask write

        for (std::size_t l = 0; l < n; ++l) {
            const auto erow = tape.embeddings.row(l);
            dweights[l] = detail::dot<T>(up_row, erow);
            const T w = step.weights[l];
            auto drow = grad.dE.row(l);
            for (std::size_t c = 0; c < d; ++c) drow[c] += w * up_row[c];
        }

        const Vector<T> dx = tape.mode == PeakedMode::verbatim
                                 ? peaked_softmax_verbatim_vjp(step.weights, step.masked_index,
                                                               step.clamped, dweights)
                                 : peaked_softmax_normalized_vjp(step.weights, tape.alpha, dweights);

        // x_l = -(v_l - m)^2 with dm/dv = e_argmax; the argmax term itself
        // vanishes because v_a == m there.
        T cross = T(0);
        for (std::size_t l = 0; l < n; ++l) {
            if (l == step.masked_index) continue;
            const T diff = state[l] - step.pre_mask_max;
            grad.dv[l] += T(-2) * diff * dx[l];
            cross += T(2) * diff * dx[l];
        }
        grad.dv[step.masked_index] += cross;

        if (i > 0) state[tape.steps[i - 1].masked_index] = tape.scores[tape.steps[i - 1].masked_index];
    }
    return grad;
}

}  // namespace softtopk
