#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "lest/errors.hpp"
#include "lest/matrix.hpp"
#include "lest/parallel.hpp"

namespace lest {

/// Learnable-shaped (here: seeded) projection matrices. All three are
/// channels x dim.
struct AttentionParams {
    Matrix w_q;
    Matrix w_k;
    Matrix w_v;
    std::uint64_t seed = 0;

    static AttentionParams init(std::size_t channels, std::size_t dim, std::uint64_t seed);
};

struct Qkv {
    Matrix q, k, v;
};

/// Q = x W_Q, K = x W_K, V = x W_V.
Qkv project_qkv(const Matrix& x, const AttentionParams& params, int workers = 1);

/// O = softmax(Q K^T / sqrt(D)) V, computed rowwise with max-subtraction.
Matrix softmax_attention(const Matrix& q, const Matrix& k, const Matrix& v, int workers = 1);

/// Trusted quadratic reference: O_i = sum_j sim(Q_i, K_j) V_j / sum_j sim(Q_i, K_j)
/// with an explicit O(N^2) double loop. Every similarity must be strictly
/// positive; a non-positive value throws OraclePreconditionError, signalling a
/// broken similarity rather than a broken caller.
template <typename SimFn>
Matrix similarity_attention_oracle(const Matrix& q, const Matrix& k, const Matrix& v, SimFn&& sim,
                                   int workers = 1) {
    if (q.cols() != k.cols()) {
        throw ContractError("similarity_attention_oracle: Q/K width mismatch");
    }
    if (k.rows() != v.rows()) {
        throw ContractError("similarity_attention_oracle: K/V row mismatch");
    }
    const std::size_t n_keys = k.rows();
    const std::size_t dv = v.cols();
    Matrix out(q.rows(), dv);
    parallel_for(q.rows(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double* out_row = out.data() + i * dv;
            double denom = 0.0;
            for (std::size_t j = 0; j < n_keys; ++j) {
                const double s = sim(q.row(i), k.row(j));
                if (!(s > 0.0)) {
                    throw OraclePreconditionError(
                        "similarity_attention_oracle: non-positive similarity at pair (" +
                        std::to_string(i) + ", " + std::to_string(j) + ")");
                }
                denom += s;
                const double* v_row = v.data() + j * dv;
                for (std::size_t c = 0; c < dv; ++c) {
                    out_row[c] += s * v_row[c];
                }
            }
            for (std::size_t c = 0; c < dv; ++c) {
                out_row[c] /= denom;
            }
        }
    });
    return out;
}

/// Type-erased overload for callers (CLI, bindings) that pay the indirection.
using SimilarityFn = std::function<double(std::span<const double>, std::span<const double>)>;
Matrix similarity_attention_oracle(const Matrix& q, const Matrix& k, const Matrix& v,
                                   const SimilarityFn& sim, int workers);

// ---- kernel-ELU linear attention -------------------------------------------

/// phi(x) = elu(x) + 1, strictly positive.
double elu_plus_one(double x);

/// Elementwise phi over a matrix: the kernel feature map.
Matrix elu_feature_map(const Matrix& m);

/// O_i = phi(Q_i) (sum_j phi(K_j)^T V_j) / (phi(Q_i) . sum_j phi(K_j)),
/// evaluated in the factorized O(N) order. Throws NumericalError naming the
/// token if a denominator underflows to zero.
Matrix kernel_linear_attention(const Matrix& q, const Matrix& k, const Matrix& v, int workers = 1);

// ---- CosFormer --------------------------------------------------------------

/// Decomposed O(N) CosFormer: sim(i, j) = relu(Q_i) relu(K_j)^T cos(pi/2 (i-j)/M)
/// with horizon M >= N. Rows whose total similarity is exactly zero (a fully
/// relu-killed query) fall back to the uniform average of V; the count of such
/// rows is reported through fallback_rows when non-null.
Matrix cosformer_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t horizon,
                           std::size_t* fallback_rows = nullptr, int workers = 1);

/// Quadratic mirror of cosformer_attention (explicit pairwise loop, same
/// fallback rule). This is the reference side of the equivalence check.
Matrix cosformer_attention_reference(const Matrix& q, const Matrix& k, const Matrix& v,
                                     std::size_t horizon, std::size_t* fallback_rows = nullptr);

// ---- DISCO: distance-cosine linear attention ---------------------------------

/// Sim(q, k) = sum_p cos(pi/4 |tanh(q_p) - tanh(k_p)|). Strictly positive and
/// at most n (the shared dimension); monotone non-increasing in each
/// coordinate distance.
double disco_similarity(std::span<const double> q, std::span<const double> k);

/// cos(pi/4 tanh(x)) / sin(pi/4 tanh(x)) feature maps; the cosine difference
/// identity turns the distance similarity into a dot product of these.
struct DiscoFeatures {
    Matrix cosf;
    Matrix sinf;
};
DiscoFeatures disco_feature_maps(const Matrix& m);

/// [cos | sin] features concatenated to width 2D; the plain dot product of two
/// such rows equals disco_similarity of the raw rows. Handy for driving the
/// generic oracle without transcendentals in the pair loop.
Matrix disco_trig_features(const Matrix& m);

/// The linear-complexity DISCO attention. Key/value aggregates are accumulated
/// once in a fixed order (ascending j, then p), then each query row reads them:
/// O(N D Dv) total. The denominator is positive by construction; a
/// non-positive value trips a hard NumericalError.
Matrix disco_attention(const Matrix& q, const Matrix& k, const Matrix& v, int workers = 1);

// ---- named variants for the CLI ----------------------------------------------

enum class AttentionVariant { softmax, kernel, cosformer, disco };

AttentionVariant attention_variant_from_string(std::string_view name);
std::string_view to_string(AttentionVariant variant);

/// Runs `variant` on (Q, K, V) the fast way. CosFormer uses horizon = N.
Matrix run_attention_variant(AttentionVariant variant, const Matrix& q, const Matrix& k,
                             const Matrix& v, int workers = 1);

/// The matching quadratic reference for `variant` (softmax: exp-dot oracle;
/// kernel: phi-dot oracle; cosformer: pairwise mirror; disco: distance-cosine
/// oracle).
Matrix run_attention_reference(AttentionVariant variant, const Matrix& q, const Matrix& k,
                               const Matrix& v, int workers = 1);

} // namespace lest
