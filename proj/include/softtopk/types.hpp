#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace softtopk {

// Error taxonomy. The CLI maps these onto exit codes; the library only throws.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct SizeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix. Element (i, j) is feature j of candidate i.
template <std::floating_point T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<T> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const T> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

template <std::floating_point T>
using Vector = std::vector<T>;

/// (dL/dE, dL/dv) as returned by every backward pass; shapes match the forward inputs.
template <std::floating_point T>
struct GradientPair {
    Matrix<T> dE;
    Vector<T> dv;
};

template <std::floating_point T>
Matrix<double> to_double(const Matrix<T>& m) {
    Matrix<double> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = static_cast<double>(m.data[i]);
    return out;
}

inline void require(bool cond, const std::string& what) {
    if (!cond) throw SizeError(what);
}

}  // namespace softtopk
