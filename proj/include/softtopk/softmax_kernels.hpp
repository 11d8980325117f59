#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "softtopk/types.hpp"

namespace softtopk {

template <std::floating_point T>
std::size_t argmax_lowest(const Vector<T>& x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if (x[i] > x[best]) best = i;
    return best;
}

template <std::floating_point T>
struct PeakedVerbatimResult {
    Vector<T> weights;
    std::size_t amax = 0;  // lowest index attaining max(x)
    bool clamped = false;  // true denominator fell below eps
};

// Unnormalized peaked weighting: out_i = exp(x_i) / max(denom, eps) with
// denom = sum_j exp(x_j) - exp(max(x)).  The denominator is evaluated as the
// sum of exp(x_j - max) over all j except the argmax, which is the same
// quantity without the cancellation of subtracting exp(max) from the total.
// Note the weights do not sum to 1; the max element always carries the
// largest weight.
template <std::floating_point T>
PeakedVerbatimResult<T> peaked_softmax_verbatim_full(const Vector<T>& x, T eps) {
    if (x.size() < 2)
        throw SizeError("peaked_softmax_verbatim requires len >= 2 (denominator is 0 for len 1), got " +
                        std::to_string(x.size()));
    PeakedVerbatimResult<T> res;
    res.amax = argmax_lowest(x);
    const T m = x[res.amax];
    T scaled_denom = T(0);  // denom / exp(m)
    for (std::size_t j = 0; j < x.size(); ++j)
        if (j != res.amax) scaled_denom += std::exp(x[j] - m);
    const T denom = std::exp(m) * scaled_denom;  // may be 0 or inf; both handled below
    res.clamped = !(denom >= eps);
    res.weights.resize(x.size());
    if (res.clamped) {
        for (std::size_t i = 0; i < x.size(); ++i) res.weights[i] = std::exp(x[i]) / eps;
    } else {
        for (std::size_t i = 0; i < x.size(); ++i) res.weights[i] = std::exp(x[i] - m) / scaled_denom;
    }
    return res;
}

template <std::floating_point T>
Vector<T> peaked_softmax_verbatim(const Vector<T>& x, T eps) {
    return peaked_softmax_verbatim_full(x, eps).weights;
}

// VJP of the verbatim kernel from its recorded forward state.  The argmax is
// treated as locally constant, so d(denom)/dx_t = exp(x_t) for t != amax and
// 0 at the argmax itself.  When the eps clamp was active the denominator is a
// constant and only the diagonal term survives.
template <std::floating_point T>
Vector<T> peaked_softmax_verbatim_vjp(const Vector<T>& weights, std::size_t amax, bool clamped,
                                      const Vector<T>& dweights) {
    require(weights.size() == dweights.size(), "peaked verbatim vjp: size mismatch");
    Vector<T> dx(weights.size());
    if (clamped) {
        for (std::size_t t = 0; t < weights.size(); ++t) dx[t] = dweights[t] * weights[t];
        return dx;
    }
    T s = T(0);
    for (std::size_t l = 0; l < weights.size(); ++l) s += dweights[l] * weights[l];
    for (std::size_t t = 0; t < weights.size(); ++t) {
        dx[t] = weights[t] * dweights[t];
        if (t != amax) dx[t] -= s * weights[t];
    }
    return dx;
}

// Standard temperature softmax: out_i = exp(a*x_i) / sum_j exp(a*x_j).
// Kahan-compensated partition sum keeps the output sum within ~1e-13 of 1
// even for very long inputs.
template <std::floating_point T>
Vector<T> peaked_softmax_normalized(const Vector<T>& x, T alpha) {
    if (x.empty()) throw SizeError("peaked_softmax_normalized requires len >= 1");
    const T m = x[argmax_lowest(x)];
    Vector<T> out(x.size());
    T sum = T(0), comp = T(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(alpha * (x[i] - m));
        T y = out[i] - comp;
        T t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    for (auto& w : out) w /= sum;
    return out;
}

template <std::floating_point T>
Vector<T> peaked_softmax_normalized_vjp(const Vector<T>& weights, T alpha, const Vector<T>& dweights) {
    require(weights.size() == dweights.size(), "peaked normalized vjp: size mismatch");
    T s = T(0);
    for (std::size_t l = 0; l < weights.size(); ++l) s += dweights[l] * weights[l];
    Vector<T> dx(weights.size());
    for (std::size_t t = 0; t < weights.size(); ++t) dx[t] = alpha * weights[t] * (dweights[t] - s);
    return dx;
}

// Two-way softmax over boosted scores (C*a, C*b).  Evaluated as a sigmoid of
// C*(b - a), which never overflows for finite inputs, unlike the textbook
// exp(C*a) / (exp(C*a) + exp(C*b)) form.
template <std::floating_point T>
std::pair<T, T> boosted_softmax(T a, T b, T c) {
    const T t = c * (b - a);
    T w0;
    if (t <= T(0)) {
        w0 = T(1) / (T(1) + std::exp(t));
    } else {
        const T e = std::exp(-t);
        w0 = e / (T(1) + e);
    }
    return {w0, T(1) - w0};
}

/// Returns (dL/da, dL/db) for upstream dL/dw0; callers fold in dL/dw1 via
/// w1 = 1 - w0 by passing dw0 - dw1 here.
template <std::floating_point T>
std::pair<T, T> boosted_softmax_backward(T a, T b, T c, T dw0) {
    const auto [w0, w1] = boosted_softmax(a, b, c);
    const T g = dw0 * c * w0 * w1;
    return {g, -g};
}

}  // namespace softtopk
