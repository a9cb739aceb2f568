#include "lest/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lest/errors.hpp"
#include "lest/parallel.hpp"

namespace lest {

Matrix matmul(const Matrix& a, const Matrix& b, int workers) {
    if (a.cols() != b.rows()) {
        throw ContractError("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                            " vs " + std::to_string(b.rows()) + ")");
    }
    Matrix out(a.rows(), b.cols(), 0.0);
    const std::size_t kk = a.cols();
    const std::size_t nn = b.cols();
    parallel_for(a.rows(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double* out_row = out.data() + i * nn;
            const double* a_row = a.data() + i * kk;
            for (std::size_t k = 0; k < kk; ++k) {
                const double aik = a_row[k];
                const double* b_row = b.data() + k * nn;
                for (std::size_t j = 0; j < nn; ++j) {
                    out_row[j] += aik * b_row[j];
                }
            }
        }
    });
    return out;
}

void fill_uniform(Matrix& m, SplitMix64& rng, double lo, double hi) {
    double* p = m.data();
    const std::size_t n = m.rows() * m.cols();
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = rng.uniform(lo, hi);
    }
}

Matrix init_linear_weight(std::size_t fan_in, std::size_t fan_out, SplitMix64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_in, fan_out);
    fill_uniform(w, rng, -bound, bound);
    return w;
}

std::vector<double> init_linear_bias(std::size_t fan_in, std::size_t n, SplitMix64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> b(n);
    for (auto& v : b) {
        v = rng.uniform(-bound, bound);
    }
    return b;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ContractError("max_abs_diff: shape mismatch");
    }
    double worst = 0.0;
    const std::size_t n = a.rows() * a.cols();
    for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

double max_rel_error(const Matrix& a, const Matrix& b, double floor) {
    double scale = floor;
    const std::size_t n = b.rows() * b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        scale = std::max(scale, std::abs(b.data()[i]));
    }
    return max_abs_diff(a, b) / scale;
}

} // namespace lest
