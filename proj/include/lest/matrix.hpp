#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lest/rng.hpp"

namespace lest {

/// Dense row-major matrix of doubles. Small on purpose: the kernels in this
/// library control their own loop and summation order, so all they need is
/// contiguous storage and row views.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// out = a * b. Throws ContractError on inner-dimension mismatch. Each output
/// element accumulates over k in ascending order regardless of worker count.
Matrix matmul(const Matrix& a, const Matrix& b, int workers = 1);

/// Fills the matrix row-major with uniform draws from [lo, hi).
void fill_uniform(Matrix& m, SplitMix64& rng, double lo, double hi);

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weight matrix of shape fan_in x fan_out.
Matrix init_linear_weight(std::size_t fan_in, std::size_t fan_out, SplitMix64& rng);

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) bias vector of length n.
std::vector<double> init_linear_bias(std::size_t fan_in, std::size_t n, SplitMix64& rng);

/// max |a - b| over all elements; matrices must have equal shape.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// max |a - b| / max(max |b|, floor). The standard matrix-level relative error
/// used by every oracle-equivalence check in this project.
double max_rel_error(const Matrix& a, const Matrix& b, double floor = 1e-30);

} // namespace lest
