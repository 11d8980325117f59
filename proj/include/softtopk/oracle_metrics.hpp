#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "softtopk/tape.hpp"
#include "softtopk/types.hpp"

namespace softtopk {

// Hard top-k selection: rows ordered by descending score, ties broken by
// lower index (stable).  This is the reference both relaxations approximate.
template <std::floating_point T>
Matrix<T> exact_topk(const Matrix<T>& embeddings, const Vector<T>& scores, std::size_t k) {
    const std::size_t n = embeddings.rows;
    require(scores.size() == n, "exact_topk: score length != embedding rows");
    if (k < 1 || k > n)
        throw SizeError("exact_topk requires 1 <= k <= n (got k=" + std::to_string(k) +
                        ", n=" + std::to_string(n) + ")");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    perm.resize(k);
    return gather_rows(embeddings, perm);
}

// Mean over reference rows of the best cosine similarity achieved by any row
// of the approximation.  All-zero rows contribute cosine 0 against anything.
inline double nccs(const Matrix<double>& reference, const Matrix<double>& approx) {
    if (reference.rows != approx.rows || reference.cols != approx.cols)
        throw SizeError("nccs requires matching k x d shapes (got " +
                        std::to_string(reference.rows) + "x" + std::to_string(reference.cols) +
                        " vs " + std::to_string(approx.rows) + "x" + std::to_string(approx.cols) +
                        ")");
    if (reference.rows == 0) throw SizeError("nccs requires at least one row");

    const std::size_t k = reference.rows;
    const std::size_t d = reference.cols;
    std::vector<double> approx_norm(k);
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += approx(j, c) * approx(j, c);
        approx_norm[j] = std::sqrt(s);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double rn = 0.0;
        for (std::size_t c = 0; c < d; ++c) rn += reference(i, c) * reference(i, c);
        rn = std::sqrt(rn);
        double best = 0.0;
        if (rn > 0.0) {
            for (std::size_t j = 0; j < k; ++j) {
                if (approx_norm[j] == 0.0) continue;
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c) dot += reference(i, c) * approx(j, c);
                best = std::max(best, dot / (rn * approx_norm[j]));
            }
        }
        total += best;
    }
    return total / static_cast<double>(k);
}

// Central differences, one probe pair per coordinate.
inline Vector<double> finite_diff_grad(const std::function<double(const Vector<double>&)>& f,
                                       const Vector<double>& x, double h) {
    if (!(h > 0.0)) throw ConfigError("finite_diff_grad requires h > 0");
    Vector<double> grad(x.size());
    Vector<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(up) || !std::isfinite(down))
            throw OracleError("finite_diff_grad: non-finite probe value at coordinate " +
                              std::to_string(i));
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

// Type-erased hook so the gradient checker can drive either relaxation.
struct DiffOperator {
    std::function<SoftSelection<double>(const Matrix<double>&, const Vector<double>&, std::size_t)>
        forward;
    std::function<GradientPair<double>(const Tape<double>&, const Matrix<double>&)> backward;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_coordinate;
    std::size_t coordinates_checked = 0;
    double tolerance = 0.0;
    bool pass = true;
};

// Compares the analytic vector-Jacobian product against central differences
// of the probed scalar loss L = <probe, forward(E, v)>.  Relative error uses
// an absolute floor so near-zero gradients do not divide by noise.
inline GradCheckReport gradcheck_operator(const DiffOperator& op, const Matrix<double>& embeddings,
                                          const Vector<double>& scores, std::size_t k,
                                          const Matrix<double>& probe, double h, double tolerance) {
    constexpr double kRelFloor = 1e-8;
    const std::size_t n = embeddings.rows;
    const std::size_t d = embeddings.cols;
    require(probe.rows == k && probe.cols == d, "gradcheck_operator: probe must be k x d");

    auto sel = op.forward(embeddings, scores, k);
    require(sel.output.rows == k && sel.output.cols == d,
            "gradcheck_operator: forward output must be k x d");
    const GradientPair<double> analytic = op.backward(sel.tape, probe);
    require(analytic.dE.rows == n && analytic.dE.cols == d && analytic.dv.size() == n,
            "gradcheck_operator: backward output shape mismatch");

    Vector<double> flat(n * d + n);
    std::copy(embeddings.data.begin(), embeddings.data.end(), flat.begin());
    std::copy(scores.begin(), scores.end(), flat.begin() + static_cast<std::ptrdiff_t>(n * d));

    auto loss = [&](const Vector<double>& x) {
        Matrix<double> e(n, d);
        std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n * d), e.data.begin());
        Vector<double> v(x.begin() + static_cast<std::ptrdiff_t>(n * d), x.end());
        const Matrix<double> out = op.forward(e, v, k).output;
        double acc = 0.0;
        for (std::size_t i = 0; i < probe.data.size(); ++i) acc += probe.data[i] * out.data[i];
        return acc;
    };
    const Vector<double> numeric = finite_diff_grad(loss, flat, h);

    GradCheckReport report;
    report.tolerance = tolerance;
    auto consider = [&](double a, double num, const std::string& name) {
        const double denom = std::max({std::abs(a), std::abs(num), kRelFloor});
        const double rel = std::abs(a - num) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_coordinate = name;
        }
        ++report.coordinates_checked;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            consider(analytic.dE(i, j), numeric[i * d + j],
                     "E[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    for (std::size_t i = 0; i < n; ++i)
        consider(analytic.dv[i], numeric[n * d + i], "v[" + std::to_string(i) + "]");
    report.pass = report.max_rel_error < tolerance;
    return report;
}

// Smallest pairwise score gap; finite-difference checks skip instances where
// a probe step could cross a tie and flip the selection order.
template <std::floating_point T>
double min_pairwise_gap(const Vector<T>& scores) {
    if (scores.size() < 2) return std::numeric_limits<double>::infinity();
    Vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        gap = std::min(gap, sorted[i + 1] - sorted[i]);
    return gap;
}

}  // namespace softtopk
