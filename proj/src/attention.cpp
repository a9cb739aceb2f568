#include "lest/attention.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lest/rng.hpp"

namespace lest {

namespace {

constexpr double kQuarterPi = 0.78539816339744831;
constexpr double kHalfPi = 1.5707963267948966;

void check_qkv_shapes(const Matrix& q, const Matrix& k, const Matrix& v, const char* who) {
    if (q.cols() != k.cols()) {
        throw ContractError(std::string(who) + ": Q/K width mismatch");
    }
    if (k.rows() != v.rows()) {
        throw ContractError(std::string(who) + ": K/V row mismatch");
    }
}

} // namespace

AttentionParams AttentionParams::init(std::size_t channels, std::size_t dim, std::uint64_t seed) {
    AttentionParams p;
    p.seed = seed;
    SplitMix64 rng(named_seed(seed, "attention.weights"));
    p.w_q = init_linear_weight(channels, dim, rng);
    p.w_k = init_linear_weight(channels, dim, rng);
    p.w_v = init_linear_weight(channels, dim, rng);
    return p;
}

Qkv project_qkv(const Matrix& x, const AttentionParams& params, int workers) {
    if (x.cols() != params.w_q.rows()) {
        throw ContractError("project_qkv: input width " + std::to_string(x.cols()) +
                            " does not match projection rows " + std::to_string(params.w_q.rows()));
    }
    return Qkv{matmul(x, params.w_q, workers), matmul(x, params.w_k, workers),
               matmul(x, params.w_v, workers)};
}

Matrix softmax_attention(const Matrix& q, const Matrix& k, const Matrix& v, int workers) {
    check_qkv_shapes(q, k, v, "softmax_attention");
    const std::size_t n_keys = k.rows();
    const std::size_t d = q.cols();
    const std::size_t dv = v.cols();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix out(q.rows(), dv);
    parallel_for(q.rows(), workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> score(n_keys);
        for (std::size_t i = begin; i < end; ++i) {
            const double* q_row = q.data() + i * d;
            double max_score = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n_keys; ++j) {
                const double* k_row = k.data() + j * d;
                double s = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    s += q_row[c] * k_row[c];
                }
                score[j] = s * inv_sqrt_d;
                max_score = std::max(max_score, score[j]);
            }
            double denom = 0.0;
            double* out_row = out.data() + i * dv;
            for (std::size_t j = 0; j < n_keys; ++j) {
                const double w = std::exp(score[j] - max_score);
                denom += w;
                const double* v_row = v.data() + j * dv;
                for (std::size_t c = 0; c < dv; ++c) {
                    out_row[c] += w * v_row[c];
                }
            }
            for (std::size_t c = 0; c < dv; ++c) {
                out_row[c] /= denom;
            }
        }
    });
    return out;
}

Matrix similarity_attention_oracle(const Matrix& q, const Matrix& k, const Matrix& v,
                                   const SimilarityFn& sim, int workers) {
    return similarity_attention_oracle(
        q, k, v,
        [&sim](std::span<const double> a, std::span<const double> b) { return sim(a, b); },
        workers);
}

// ---- kernel-ELU ---------------------------------------------------------------

double elu_plus_one(double x) { return x > 0.0 ? x + 1.0 : std::exp(x); }

Matrix elu_feature_map(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows() * m.cols(); ++i) {
        out.data()[i] = elu_plus_one(m.data()[i]);
    }
    return out;
}

Matrix kernel_linear_attention(const Matrix& q, const Matrix& k, const Matrix& v, int workers) {
    check_qkv_shapes(q, k, v, "kernel_linear_attention");
    const std::size_t n_keys = k.rows();
    const std::size_t d = q.cols();
    const std::size_t dv = v.cols();

    const Matrix qf = elu_feature_map(q);
    const Matrix kf = elu_feature_map(k);

    // aggregates over keys, ascending j then p
    Matrix kv(d, dv);
    std::vector<double> ksum(d, 0.0);
    for (std::size_t j = 0; j < n_keys; ++j) {
        const double* k_row = kf.data() + j * d;
        const double* v_row = v.data() + j * dv;
        for (std::size_t p = 0; p < d; ++p) {
            double* kv_row = kv.data() + p * dv;
            const double kp = k_row[p];
            for (std::size_t c = 0; c < dv; ++c) {
                kv_row[c] += kp * v_row[c];
            }
            ksum[p] += kp;
        }
    }

    Matrix out(q.rows(), dv);
    parallel_for(q.rows(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double* q_row = qf.data() + i * d;
            double denom = 0.0;
            for (std::size_t p = 0; p < d; ++p) {
                denom += q_row[p] * ksum[p];
            }
            if (!(denom > 0.0)) {
                throw NumericalError("kernel_linear_attention: zero denominator at token " +
                                     std::to_string(i));
            }
            double* out_row = out.data() + i * dv;
            for (std::size_t p = 0; p < d; ++p) {
                const double qp = q_row[p];
                const double* kv_row = kv.data() + p * dv;
                for (std::size_t c = 0; c < dv; ++c) {
                    out_row[c] += qp * kv_row[c];
                }
            }
            for (std::size_t c = 0; c < dv; ++c) {
                out_row[c] /= denom;
            }
        }
    });
    return out;
}

// ---- CosFormer ------------------------------------------------------------------

namespace {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

void uniform_average_row(const Matrix& v, double* out_row) {
    const std::size_t n = v.rows();
    const std::size_t dv = v.cols();
    for (std::size_t c = 0; c < dv; ++c) {
        out_row[c] = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double* v_row = v.data() + j * dv;
        for (std::size_t c = 0; c < dv; ++c) {
            out_row[c] += v_row[c];
        }
    }
    for (std::size_t c = 0; c < dv; ++c) {
        out_row[c] /= static_cast<double>(n);
    }
}

} // namespace

Matrix cosformer_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t horizon,
                           std::size_t* fallback_rows, int workers) {
    check_qkv_shapes(q, k, v, "cosformer_attention");
    if (q.rows() != k.rows()) {
        throw ContractError("cosformer_attention: index re-weighting needs equal Q/K row counts");
    }
    if (horizon < q.rows()) {
        throw ContractError("cosformer_attention: horizon M must be >= N");
    }
    const std::size_t n = q.rows();
    const std::size_t d = q.cols();
    const std::size_t dv = v.cols();

    // index-angle tables: angle_i = pi/2 * i / M
    std::vector<double> cos_a(n), sin_a(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = kHalfPi * static_cast<double>(i) / static_cast<double>(horizon);
        cos_a[i] = std::cos(a);
        sin_a[i] = std::sin(a);
    }

    // aggregates of cos/sin-weighted relu'd keys, ascending j then p
    Matrix kv_cos(d, dv), kv_sin(d, dv);
    std::vector<double> ksum_cos(d, 0.0), ksum_sin(d, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double* k_row = k.data() + j * d;
        const double* v_row = v.data() + j * dv;
        for (std::size_t p = 0; p < d; ++p) {
            const double kp = relu(k_row[p]);
            const double kc = kp * cos_a[j];
            const double ks = kp * sin_a[j];
            double* kvc = kv_cos.data() + p * dv;
            double* kvs = kv_sin.data() + p * dv;
            for (std::size_t c = 0; c < dv; ++c) {
                kvc[c] += kc * v_row[c];
                kvs[c] += ks * v_row[c];
            }
            ksum_cos[p] += kc;
            ksum_sin[p] += ks;
        }
    }

    Matrix out(n, dv);
    std::atomic<std::size_t> fallbacks{0};
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        std::size_t local_fallbacks = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const double* q_row = q.data() + i * d;
            double denom = 0.0;
            for (std::size_t p = 0; p < d; ++p) {
                const double qp = relu(q_row[p]);
                denom += qp * (cos_a[i] * ksum_cos[p] + sin_a[i] * ksum_sin[p]);
            }
            double* out_row = out.data() + i * dv;
            if (denom <= 0.0) {
                uniform_average_row(v, out_row);
                ++local_fallbacks;
                continue;
            }
            for (std::size_t p = 0; p < d; ++p) {
                const double qc = relu(q_row[p]) * cos_a[i];
                const double qs = relu(q_row[p]) * sin_a[i];
                const double* kvc = kv_cos.data() + p * dv;
                const double* kvs = kv_sin.data() + p * dv;
                for (std::size_t c = 0; c < dv; ++c) {
                    out_row[c] += qc * kvc[c] + qs * kvs[c];
                }
            }
            for (std::size_t c = 0; c < dv; ++c) {
                out_row[c] /= denom;
            }
        }
        fallbacks.fetch_add(local_fallbacks, std::memory_order_relaxed);
    });
    if (fallback_rows) {
        *fallback_rows = fallbacks.load();
    }
    return out;
}

Matrix cosformer_attention_reference(const Matrix& q, const Matrix& k, const Matrix& v,
                                     std::size_t horizon, std::size_t* fallback_rows) {
    check_qkv_shapes(q, k, v, "cosformer_attention_reference");
    if (q.rows() != k.rows()) {
        throw ContractError("cosformer_attention_reference: equal Q/K row counts required");
    }
    if (horizon < q.rows()) {
        throw ContractError("cosformer_attention_reference: horizon M must be >= N");
    }
    const std::size_t n = q.rows();
    const std::size_t d = q.cols();
    const std::size_t dv = v.cols();
    Matrix out(n, dv);
    std::size_t fallbacks = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double denom = 0.0;
        std::vector<double> sim(n);
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            const double* q_row = q.data() + i * d;
            const double* k_row = k.data() + j * d;
            for (std::size_t p = 0; p < d; ++p) {
                dot += relu(q_row[p]) * relu(k_row[p]);
            }
            const double di = static_cast<double>(i) - static_cast<double>(j);
            sim[j] = dot * std::cos(kHalfPi * di / static_cast<double>(horizon));
            denom += sim[j];
        }
        double* out_row = out.data() + i * dv;
        if (denom <= 0.0) {
            uniform_average_row(v, out_row);
            ++fallbacks;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double* v_row = v.data() + j * dv;
            for (std::size_t c = 0; c < dv; ++c) {
                out_row[c] += sim[j] * v_row[c];
            }
        }
        for (std::size_t c = 0; c < dv; ++c) {
            out_row[c] /= denom;
        }
    }
    if (fallback_rows) {
        *fallback_rows = fallbacks;
    }
    return out;
}

// ---- DISCO ----------------------------------------------------------------------

double disco_similarity(std::span<const double> q, std::span<const double> k) {
    if (q.size() != k.size()) {
        throw ContractError("disco_similarity: dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t p = 0; p < q.size(); ++p) {
        s += std::cos(kQuarterPi * std::abs(std::tanh(q[p]) - std::tanh(k[p])));
    }
    return s;
}

DiscoFeatures disco_feature_maps(const Matrix& m) {
    DiscoFeatures f{Matrix(m.rows(), m.cols()), Matrix(m.rows(), m.cols())};
    for (std::size_t i = 0; i < m.rows() * m.cols(); ++i) {
        const double t = kQuarterPi * std::tanh(m.data()[i]);
        f.cosf.data()[i] = std::cos(t);
        f.sinf.data()[i] = std::sin(t);
    }
    return f;
}

Matrix disco_trig_features(const Matrix& m) {
    const DiscoFeatures f = disco_feature_maps(m);
    Matrix out(m.rows(), 2 * m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* row = out.data() + i * out.cols();
        const double* c = f.cosf.data() + i * m.cols();
        const double* s = f.sinf.data() + i * m.cols();
        for (std::size_t p = 0; p < m.cols(); ++p) {
            row[p] = c[p];
            row[m.cols() + p] = s[p];
        }
    }
    return out;
}

Matrix disco_attention(const Matrix& q, const Matrix& k, const Matrix& v, int workers) {
    check_qkv_shapes(q, k, v, "disco_attention");
    const std::size_t n_keys = k.rows();
    const std::size_t d = q.cols();
    const std::size_t dv = v.cols();

    const DiscoFeatures qf = disco_feature_maps(q);
    const DiscoFeatures kf = disco_feature_maps(k);

    // Disco(K, V) aggregates, ascending j then p: sums of cos/sin-featured keys
    // against values and against one (for the normalizer)
    Matrix kv_cos(d, dv), kv_sin(d, dv);
    std::vector<double> ksum_cos(d, 0.0), ksum_sin(d, 0.0);
    for (std::size_t j = 0; j < n_keys; ++j) {
        const double* kc_row = kf.cosf.data() + j * d;
        const double* ks_row = kf.sinf.data() + j * d;
        const double* v_row = v.data() + j * dv;
        for (std::size_t p = 0; p < d; ++p) {
            double* kvc = kv_cos.data() + p * dv;
            double* kvs = kv_sin.data() + p * dv;
            const double kc = kc_row[p];
            const double ks = ks_row[p];
            for (std::size_t c = 0; c < dv; ++c) {
                kvc[c] += kc * v_row[c];
                kvs[c] += ks * v_row[c];
            }
            ksum_cos[p] += kc;
            ksum_sin[p] += ks;
        }
    }

    Matrix out(q.rows(), dv);
    parallel_for(q.rows(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double* qc_row = qf.cosf.data() + i * d;
            const double* qs_row = qf.sinf.data() + i * d;
            double denom = 0.0;
            for (std::size_t p = 0; p < d; ++p) {
                denom += qc_row[p] * ksum_cos[p];
            }
            for (std::size_t p = 0; p < d; ++p) {
                denom += qs_row[p] * ksum_sin[p];
            }
            if (!(denom > 0.0)) {
                // positive by the similarity range bound; reaching this means
                // catastrophic cancellation, not a tolerable input
                throw NumericalError("disco_attention: non-positive denominator at token " +
                                     std::to_string(i));
            }
            double* out_row = out.data() + i * dv;
            for (std::size_t p = 0; p < d; ++p) {
                const double qc = qc_row[p];
                const double* kvc = kv_cos.data() + p * dv;
                for (std::size_t c = 0; c < dv; ++c) {
                    out_row[c] += qc * kvc[c];
                }
            }
            for (std::size_t p = 0; p < d; ++p) {
                const double qs = qs_row[p];
                const double* kvs = kv_sin.data() + p * dv;
                for (std::size_t c = 0; c < dv; ++c) {
                    out_row[c] += qs * kvs[c];
                }
            }
            for (std::size_t c = 0; c < dv; ++c) {
                out_row[c] /= denom;
            }
        }
    });
    return out;
}

// ---- named variants ---------------------------------------------------------------

AttentionVariant attention_variant_from_string(std::string_view name) {
    if (name == "softmax") {
        return AttentionVariant::softmax;
    }
    if (name == "kernel") {
        return AttentionVariant::kernel;
    }
    if (name == "cosformer") {
        return AttentionVariant::cosformer;
    }
    if (name == "disco") {
        return AttentionVariant::disco;
    }
    throw ContractError("unknown attention variant: " + std::string(name));
}

std::string_view to_string(AttentionVariant variant) {
    switch (variant) {
    case AttentionVariant::softmax:
        return "softmax";
    case AttentionVariant::kernel:
        return "kernel";
    case AttentionVariant::cosformer:
        return "cosformer";
    case AttentionVariant::disco:
        return "disco";
    }
    return "?";
}

Matrix run_attention_variant(AttentionVariant variant, const Matrix& q, const Matrix& k,
                             const Matrix& v, int workers) {
    switch (variant) {
    case AttentionVariant::softmax:
        return softmax_attention(q, k, v, workers);
    case AttentionVariant::kernel:
        return kernel_linear_attention(q, k, v, workers);
    case AttentionVariant::cosformer:
        return cosformer_attention(q, k, v, q.rows(), nullptr, workers);
    case AttentionVariant::disco:
        return disco_attention(q, k, v, workers);
    }
    throw ContractError("run_attention_variant: bad variant");
}

Matrix run_attention_reference(AttentionVariant variant, const Matrix& q, const Matrix& k,
                               const Matrix& v, int workers) {
    switch (variant) {
    case AttentionVariant::softmax: {
        const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
        return similarity_attention_oracle(
            q, k, v,
            [inv_sqrt_d](std::span<const double> a, std::span<const double> b) {
                double dot = 0.0;
                for (std::size_t p = 0; p < a.size(); ++p) {
                    dot += a[p] * b[p];
                }
                return std::exp(dot * inv_sqrt_d);
            },
            workers);
    }
    case AttentionVariant::kernel: {
        const Matrix qf = elu_feature_map(q);
        const Matrix kf = elu_feature_map(k);
        return similarity_attention_oracle(
            qf, kf, v,
            [](std::span<const double> a, std::span<const double> b) {
                double dot = 0.0;
                for (std::size_t p = 0; p < a.size(); ++p) {
                    dot += a[p] * b[p];
                }
                return dot;
            },
            workers);
    }
    case AttentionVariant::cosformer:
        return cosformer_attention_reference(q, k, v, q.rows());
    case AttentionVariant::disco:
        return similarity_attention_oracle(
            q, k, v,
            [](std::span<const double> a, std::span<const double> b) {
                return disco_similarity(a, b);
            },
            workers);
    }
    throw ContractError("run_attention_reference: bad variant");
}

} // namespace lest
