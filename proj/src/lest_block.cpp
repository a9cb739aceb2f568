#include "lest/lest_block.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <type_traits>

#include "lest/errors.hpp"
#include "lest/parallel.hpp"
#include "lest/rng.hpp"

namespace lest {

namespace {

constexpr double kLayerNormEps = 1e-5;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.70710678118654752)); }

LayerNormParams init_layer_norm(std::size_t width) {
    return LayerNormParams{std::vector<double>(width, 1.0), std::vector<double>(width, 0.0)};
}

void layer_norm_row(const double* in, double* out, const LayerNormParams& p, std::size_t width) {
    double mean = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
        mean += in[j];
    }
    mean /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
        const double d = in[j] - mean;
        var += d * d;
    }
    var /= static_cast<double>(width);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t j = 0; j < width; ++j) {
        out[j] = p.gain[j] * ((in[j] - mean) * inv) + p.bias[j];
    }
}

Matrix layer_norm(const Matrix& x, const LayerNormParams& p) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        layer_norm_row(x.data() + i * x.cols(), out.data() + i * x.cols(), p, x.cols());
    }
    return out;
}

// x += gelu(LN2(x) W1 + b1) W2 + b2, rowwise
void add_ffn(Matrix& x, const TransformerLayerParams& p, int workers) {
    const std::size_t width = x.cols();
    const std::size_t hidden = p.ffn.w1.cols();
    parallel_for(x.rows(), workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> normed(width);
        std::vector<double> h(hidden);
        for (std::size_t i = begin; i < end; ++i) {
            double* x_row = x.data() + i * width;
            layer_norm_row(x_row, normed.data(), p.norm2, width);
            for (std::size_t j = 0; j < hidden; ++j) {
                double acc = p.ffn.b1[j];
                for (std::size_t c = 0; c < width; ++c) {
                    acc += normed[c] * p.ffn.w1(c, j);
                }
                h[j] = gelu(acc);
            }
            for (std::size_t c = 0; c < width; ++c) {
                double acc = p.ffn.b2[c];
                for (std::size_t j = 0; j < hidden; ++j) {
                    acc += h[j] * p.ffn.w2(j, c);
                }
                x_row[c] += acc;
            }
        }
    });
}

void check_layer_shapes(const Matrix& x, const TransformerLayerParams& p, const char* who) {
    if (p.attention.w_q.rows() != x.cols() || p.attention.w_q.cols() != x.cols()) {
        throw ContractError(std::string(who) +
                            ": attention projection must be square channels x channels");
    }
    if (p.ffn.w1.rows() != x.cols() || p.ffn.w2.cols() != x.cols()) {
        throw ContractError(std::string(who) + ": ffn width does not match channels");
    }
}

// Masked softmax attention over one gathered group block. `rows` indexes into
// x; the block may be padded past `live` with ignored tokens.
void grouped_softmax_block(const Matrix& x, std::span<const std::uint32_t> rows, std::size_t live,
                           const TransformerLayerParams& p, Matrix& out) {
    const std::size_t width = x.cols();
    const std::size_t m = rows.size(); // live rows plus padding

    Matrix block(m, width);
    for (std::size_t t = 0; t < live; ++t) {
        const double* src = x.data() + rows[t] * width;
        double* dst = block.data() + t * width;
        for (std::size_t c = 0; c < width; ++c) {
            dst[c] = src[c];
        }
    }

    Matrix normed = layer_norm(block, p.norm1);
    Qkv qkv = project_qkv(normed, p.attention);

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(width));
    std::vector<double> score(m);
    for (std::size_t t = 0; t < live; ++t) {
        const double* q_row = qkv.q.data() + t * width;
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < m; ++u) {
            if (u >= live) {
                score[u] = -std::numeric_limits<double>::infinity(); // masked padding key
                continue;
            }
            const double* k_row = qkv.k.data() + u * width;
            double s = 0.0;
            for (std::size_t c = 0; c < width; ++c) {
                s += q_row[c] * k_row[c];
            }
            score[u] = s * inv_sqrt_d;
            max_score = std::max(max_score, score[u]);
        }
        double denom = 0.0;
        std::vector<double> acc(width, 0.0);
        for (std::size_t u = 0; u < m; ++u) {
            const double w = std::exp(score[u] - max_score);
            denom += w;
            const double* v_row = qkv.v.data() + u * width;
            for (std::size_t c = 0; c < width; ++c) {
                acc[c] += w * v_row[c];
            }
        }
        double* out_row = out.data() + rows[t] * width;
        const double* x_row = x.data() + rows[t] * width;
        for (std::size_t c = 0; c < width; ++c) {
            out_row[c] = x_row[c] + acc[c] / denom; // residual
        }
    }
}

} // namespace

TransformerLayerParams TransformerLayerParams::init(std::size_t channels, std::size_t ffn_hidden,
                                                    std::uint64_t seed) {
    TransformerLayerParams p;
    p.seed = seed;
    p.attention = AttentionParams::init(channels, channels, named_seed(seed, "layer.attention"));
    SplitMix64 rng(named_seed(seed, "layer.ffn"));
    p.ffn.w1 = init_linear_weight(channels, ffn_hidden, rng);
    p.ffn.b1 = init_linear_bias(channels, ffn_hidden, rng);
    p.ffn.w2 = init_linear_weight(ffn_hidden, channels, rng);
    p.ffn.b2 = init_linear_bias(ffn_hidden, channels, rng);
    p.norm1 = init_layer_norm(channels);
    p.norm2 = init_layer_norm(channels);
    return p;
}

GroupedMode grouped_mode_from_string(std::string_view name) {
    if (name == "sequential") {
        return GroupedMode::sequential;
    }
    if (name == "padded") {
        return GroupedMode::padded;
    }
    throw ContractError("unknown grouped mode: " + std::string(name));
}

std::string_view to_string(GroupedMode mode) {
    return mode == GroupedMode::sequential ? "sequential" : "padded";
}

std::vector<std::array<int, 3>> LestConfig::default_shifts(std::size_t capacity) {
    const int half = static_cast<int>(std::cbrt(static_cast<double>(capacity)));
    return {{0, 0, 0}, {half, half, half}};
}

void LestConfig::validate() const {
    grid.validate();
    if (channels == 0 || attn_dim == 0 || ffn_hidden == 0 || pointnet_hidden == 0 ||
        group_capacity == 0 || layers_per_grid == 0 || n_classes == 0 || decoder_hidden == 0) {
        throw ContractError("LestConfig: all sizes must be positive");
    }
    if (attn_dim != channels) {
        throw ContractError("LestConfig: attn_dim must equal channels (the encoder residual "
                            "adds the attention output back onto the features)");
    }
    if (shifts.empty()) {
        throw ContractError("LestConfig: at least one shift is required");
    }
    if (workers < 1) {
        throw ContractError("LestConfig: workers must be >= 1");
    }
}

std::vector<std::array<int, 3>> LestConfig::active_shifts() const {
    if (single_grid) {
        return {shifts.front()};
    }
    return shifts;
}

FusionParams FusionParams::init(std::size_t in_width, std::size_t hidden, std::size_t n_classes,
                                std::uint64_t seed) {
    FusionParams p;
    p.seed = seed;
    SplitMix64 rng(named_seed(seed, "decoder.weights"));
    p.w1 = init_linear_weight(in_width, hidden, rng);
    p.b1 = init_linear_bias(in_width, hidden, rng);
    p.w2 = init_linear_weight(hidden, n_classes, rng);
    p.b2 = init_linear_bias(hidden, n_classes, rng);
    return p;
}

LestParams LestParams::init(const LestConfig& cfg) {
    cfg.validate();
    LestParams p;
    const std::uint64_t pn_seed =
        cfg.pointnet_seed ? *cfg.pointnet_seed : named_seed(cfg.seed, "pointnet");
    p.pointnet = MiniPointNetParams::init(cfg.pointnet_hidden, cfg.channels, pn_seed);
    const auto shifts = cfg.active_shifts();
    p.grid_layers.resize(shifts.size());
    for (std::size_t g = 0; g < shifts.size(); ++g) {
        for (std::size_t l = 0; l < cfg.layers_per_grid; ++l) {
            const std::string name = "sfc.grid" + std::to_string(g) + ".layer" + std::to_string(l);
            p.grid_layers[g].push_back(TransformerLayerParams::init(
                cfg.channels, cfg.ffn_hidden, named_seed(cfg.seed, name)));
        }
    }
    p.disco_layer =
        TransformerLayerParams::init(cfg.channels, cfg.ffn_hidden, named_seed(cfg.seed, "disco"));
    const std::size_t fused_width = cfg.disable_disco ? cfg.channels : 2 * cfg.channels;
    p.decoder = FusionParams::init(fused_width, cfg.decoder_hidden, cfg.n_classes,
                                   named_seed(cfg.seed, "decoder"));
    return p;
}

Matrix encoder_layer_softmax(const Matrix& x, const TransformerLayerParams& params, int workers) {
    check_layer_shapes(x, params, "encoder_layer_softmax");
    Matrix normed = layer_norm(x, params.norm1);
    Qkv qkv = project_qkv(normed, params.attention, workers);
    Matrix attn = softmax_attention(qkv.q, qkv.k, qkv.v, workers);
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows() * out.cols(); ++i) {
        out.data()[i] += attn.data()[i];
    }
    add_ffn(out, params, workers);
    return out;
}

Matrix encoder_layer_grouped(const Matrix& x, const GroupAssignment& ga,
                             const TransformerLayerParams& params, GroupedMode mode, int workers) {
    check_layer_shapes(x, params, "encoder_layer_grouped");
    if (ga.n_items() != x.rows()) {
        throw ContractError("encoder_layer_grouped: assignment covers " +
                            std::to_string(ga.n_items()) + " voxels, features have " +
                            std::to_string(x.rows()));
    }
    if (mode == GroupedMode::padded && ga.group_size_cap == 0) {
        throw ContractError("encoder_layer_grouped: padded mode needs a capacity-based grouping");
    }

    Matrix out(x.rows(), x.cols());
    parallel_for(ga.n_groups, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint32_t> rows;
        for (std::size_t g = begin; g < end; ++g) {
            const std::size_t live = ga.group_begin[g + 1] - ga.group_begin[g];
            if (live == 0) {
                continue;
            }
            const std::size_t padded =
                mode == GroupedMode::padded ? ga.group_size_cap : live;
            rows.assign(padded, 0);
            for (std::size_t t = 0; t < live; ++t) {
                rows[t] = ga.perm[ga.group_begin[g] + t];
            }
            grouped_softmax_block(x, rows, live, params, out);
        }
    });
    add_ffn(out, params, workers);
    return out;
}

Matrix encoder_layer_disco(const Matrix& x, const TransformerLayerParams& params, int workers) {
    check_layer_shapes(x, params, "encoder_layer_disco");
    Matrix normed = layer_norm(x, params.norm1);
    Qkv qkv = project_qkv(normed, params.attention, workers);
    Matrix attn = disco_attention(qkv.q, qkv.k, qkv.v, workers);
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows() * out.cols(); ++i) {
        out.data()[i] += attn.data()[i];
    }
    add_ffn(out, params, workers);
    return out;
}

Matrix grouped_transformer_branch(const VoxelSet& voxels, const LestConfig& cfg,
                                  const std::vector<std::vector<TransformerLayerParams>>& layers,
                                  std::vector<GroupAssignment>* out_assignments) {
    if (voxels.features.rows() != voxels.size()) {
        throw ContractError("grouped_transformer_branch: features missing; run featurize_voxels");
    }
    const auto shifts = cfg.active_shifts();
    if (layers.size() != shifts.size()) {
        throw ContractError("grouped_transformer_branch: layer set does not match grid count");
    }
    Matrix x = voxels.features;
    for (std::size_t g = 0; g < shifts.size(); ++g) {
        GroupAssignment ga = sfc_group(voxels, cfg.group_capacity, shifts[g]);
        for (const TransformerLayerParams& layer : layers[g]) {
            x = encoder_layer_grouped(x, ga, layer, cfg.grouped_mode, cfg.workers);
        }
        if (out_assignments) {
            out_assignments->push_back(std::move(ga));
        }
    }
    return x;
}

Matrix disco_branch(const VoxelSet& voxels, const TransformerLayerParams& params, int workers) {
    if (voxels.features.rows() != voxels.size()) {
        throw ContractError("disco_branch: features missing; run featurize_voxels");
    }
    return encoder_layer_disco(voxels.features, params, workers);
}

Matrix channel_attention(const Matrix& x) {
    if (x.rows() == 0) {
        return x;
    }
    const std::size_t width = x.cols();
    // squeeze: per-channel max over all rows
    std::vector<double> pooled(width, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* row = x.data() + i * width;
        for (std::size_t j = 0; j < width; ++j) {
            pooled[j] = std::max(pooled[j], row[j]);
        }
    }
    // softmax channel descriptor
    double max_a = -std::numeric_limits<double>::infinity();
    for (double a : pooled) {
        max_a = std::max(max_a, a);
    }
    double denom = 0.0;
    std::vector<double> w(width);
    for (std::size_t j = 0; j < width; ++j) {
        w[j] = std::exp(pooled[j] - max_a);
        denom += w[j];
    }
    for (std::size_t j = 0; j < width; ++j) {
        w[j] /= denom;
    }
    Matrix out(x.rows(), width);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* src = x.data() + i * width;
        double* dst = out.data() + i * width;
        for (std::size_t j = 0; j < width; ++j) {
            dst[j] = src[j] * w[j];
        }
    }
    return out;
}

Matrix concat_channels(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ContractError("concat_channels: row count mismatch");
    }
    Matrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* dst = out.data() + i * out.cols();
        const double* pa = a.data() + i * a.cols();
        const double* pb = b.data() + i * b.cols();
        for (std::size_t j = 0; j < a.cols(); ++j) {
            dst[j] = pa[j];
        }
        for (std::size_t j = 0; j < b.cols(); ++j) {
            dst[a.cols() + j] = pb[j];
        }
    }
    return out;
}

Matrix channel_attention_fuse(const Matrix& x_sfc, const Matrix& x_disco) {
    return channel_attention(concat_channels(x_sfc, x_disco));
}

Matrix decode(const Matrix& fused, const FusionParams& params, int workers) {
    if (fused.cols() != params.w1.rows()) {
        throw ContractError("decode: input width " + std::to_string(fused.cols()) +
                            " does not match decoder width " + std::to_string(params.w1.rows()));
    }
    const std::size_t hidden = params.w1.cols();
    const std::size_t k = params.w2.cols();
    Matrix out(fused.rows(), k);
    parallel_for(fused.rows(), workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> h(hidden);
        for (std::size_t i = begin; i < end; ++i) {
            const double* in_row = fused.data() + i * fused.cols();
            for (std::size_t j = 0; j < hidden; ++j) {
                double acc = params.b1[j];
                for (std::size_t c = 0; c < fused.cols(); ++c) {
                    acc += in_row[c] * params.w1(c, j);
                }
                h[j] = acc > 0.0 ? acc : 0.0;
            }
            double* out_row = out.data() + i * k;
            for (std::size_t c = 0; c < k; ++c) {
                double acc = params.b2[c];
                for (std::size_t j = 0; j < hidden; ++j) {
                    acc += h[j] * params.w2(j, c);
                }
                out_row[c] = acc;
            }
        }
    });
    return out;
}

ForwardResult forward(const PointCloud& cloud, const LestConfig& cfg, const LestParams& params) {
    cfg.validate();
    ForwardResult result;
    ForwardReport& report = result.report;
    report.n_points = cloud.size();

    using clock = std::chrono::steady_clock;
    auto timed = [&report](const char* stage, auto&& fn) {
        const auto t0 = clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            report.timings.push_back({stage, std::chrono::duration<double>(clock::now() - t0).count()});
        } else {
            auto value = fn();
            report.timings.push_back({stage, std::chrono::duration<double>(clock::now() - t0).count()});
            return value;
        }
    };

    VoxelSet voxels = timed("voxelize", [&] { return assign_voxels(cloud, cfg.grid); });

    timed("featurize", [&] { featurize_voxels(voxels, cloud, params.pointnet, cfg.workers); });
    report.n_voxels = voxels.size();
    report.n_dropped = voxels.n_dropped;

    std::vector<GroupAssignment> assignments;
    Matrix x_sfc = timed("sfc_branch",
                         [&] { return grouped_transformer_branch(voxels, cfg, params.grid_layers,
                                                                 &assignments); });
    for (const auto& ga : assignments) {
        report.groups_per_grid.push_back(ga.n_groups);
        const GroupStats st = group_stats(ga);
        report.max_group_per_grid.push_back(st.max_size);
    }

    Matrix fused_input = x_sfc;
    if (!cfg.disable_disco) {
        Matrix x_disco =
            timed("disco_branch", [&] { return disco_branch(voxels, params.disco_layer, cfg.workers); });
        fused_input = concat_channels(x_sfc, x_disco);
    }

    Matrix fused = timed("fuse", [&] {
        return cfg.disable_channel_attention ? fused_input : channel_attention(fused_input);
    });

    Matrix voxel_logits = timed("decode", [&] { return decode(fused, params.decoder, cfg.workers); });

    result.point_logits = timed("devoxelize", [&] { return devoxelize(voxels, voxel_logits); });
    return result;
}

} // namespace lest
