#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lest/attention.hpp"
#include "lest/grouping.hpp"
#include "lest/matrix.hpp"
#include "lest/voxelizer.hpp"

namespace lest {

struct LayerNormParams {
    std::vector<double> gain; ///< init 1
    std::vector<double> bias; ///< init 0
};

struct FfnParams {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
};

/// One pre-norm encoder layer: x += Attn(LN1(x)); x += FFN(LN2(x)). Single
/// head, GELU feed-forward. The attention dim equals the channel width so the
/// residual needs no output projection.
struct TransformerLayerParams {
    AttentionParams attention; ///< channels x channels
    FfnParams ffn;             ///< channels -> ffn_hidden -> channels
    LayerNormParams norm1;
    LayerNormParams norm2;
    std::uint64_t seed = 0;

    static TransformerLayerParams init(std::size_t channels, std::size_t ffn_hidden,
                                       std::uint64_t seed);
};

/// How group-restricted attention is evaluated. Both modes produce the same
/// numbers; `padded` mirrors batched execution by padding every group to the
/// capacity S with masked tokens whose attention weight is forced to zero.
enum class GroupedMode { sequential, padded };

GroupedMode grouped_mode_from_string(std::string_view name);
std::string_view to_string(GroupedMode mode);

struct LestConfig {
    VoxelGridSpec grid;               ///< quantization geometry for forward()
    std::size_t channels = 64;        ///< C, voxel feature width
    std::size_t attn_dim = 64;        ///< D; must equal channels (residual path)
    std::size_t ffn_hidden = 128;     ///< F
    std::size_t pointnet_hidden = 32; ///< H
    std::size_t group_capacity = 48;  ///< S
    std::vector<std::array<int, 3>> shifts;
    std::size_t layers_per_grid = 1;
    std::size_t n_classes = 16; ///< K
    std::size_t decoder_hidden = 64;
    GroupedMode grouped_mode = GroupedMode::sequential;
    bool single_grid = false;              ///< ablation: first shift only
    bool disable_disco = false;            ///< ablation: SFC branch alone
    bool disable_channel_attention = false;///< ablation: plain concatenation
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> pointnet_seed; ///< overrides the fan-out from `seed`
    int workers = 1;

    /// Two grids: the identity shift and a half-stride cube of floor(S^(1/3)).
    static std::vector<std::array<int, 3>> default_shifts(std::size_t capacity);

    void validate() const;
    std::vector<std::array<int, 3>> active_shifts() const;
};

/// Decoder MLP: in_width -> hidden -> n_classes, relu in between.
struct FusionParams {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
    std::uint64_t seed = 0;

    static FusionParams init(std::size_t in_width, std::size_t hidden, std::size_t n_classes,
                             std::uint64_t seed);
};

/// Every weight of the pipeline, fanned out from one seed by component name.
struct LestParams {
    MiniPointNetParams pointnet;
    std::vector<std::vector<TransformerLayerParams>> grid_layers; ///< [grid][layer]
    TransformerLayerParams disco_layer;
    FusionParams decoder;

    static LestParams init(const LestConfig& cfg);
};

// ---- layer evaluation ----------------------------------------------------------

/// Full-attention encoder layer (reference path; also the grouped layer when a
/// group spans all tokens).
Matrix encoder_layer_softmax(const Matrix& x, const TransformerLayerParams& params,
                             int workers = 1);

/// Encoder layer with softmax attention restricted to each group of `ga`
/// (block-diagonal). Groups are independent work items.
Matrix encoder_layer_grouped(const Matrix& x, const GroupAssignment& ga,
                             const TransformerLayerParams& params, GroupedMode mode,
                             int workers = 1);

/// Encoder layer whose attention is DISCO over all rows.
Matrix encoder_layer_disco(const Matrix& x, const TransformerLayerParams& params, int workers = 1);

// ---- branches, fusion, decode ----------------------------------------------------

/// Shifted-SFC branch: for each active shift, regroup and run layers_per_grid
/// grouped encoder layers. Output keeps the original voxel order. When
/// out_assignments is non-null the per-grid assignments are copied out for
/// reporting.
Matrix grouped_transformer_branch(const VoxelSet& voxels, const LestConfig& cfg,
                                  const std::vector<std::vector<TransformerLayerParams>>& layers,
                                  std::vector<GroupAssignment>* out_assignments = nullptr);

/// Global DISCO branch: one encoder layer over all voxels.
Matrix disco_branch(const VoxelSet& voxels, const TransformerLayerParams& params, int workers = 1);

/// Softmax(channel max-pool) reweighting: a_j = max_i x_ij, w = softmax(a),
/// o_ij = x_ij * w_j.
Matrix channel_attention(const Matrix& x);

/// Concatenates the two branch outputs along channels and applies channel
/// attention to the 2C-wide result.
Matrix channel_attention_fuse(const Matrix& x_sfc, const Matrix& x_disco);

Matrix concat_channels(const Matrix& a, const Matrix& b);

/// Rowwise decoder MLP producing per-voxel class logits.
Matrix decode(const Matrix& fused, const FusionParams& params, int workers = 1);

// ---- whole pipeline ----------------------------------------------------------------

struct StageTime {
    std::string stage;
    double seconds = 0.0;
};

struct ForwardReport {
    std::size_t n_points = 0;
    std::size_t n_voxels = 0;
    std::size_t n_dropped = 0;
    std::vector<std::size_t> groups_per_grid;
    std::vector<std::size_t> max_group_per_grid;
    std::vector<StageTime> timings;
};

struct ForwardResult {
    Matrix point_logits; ///< n_points x K; dropped points are NaN rows
    ForwardReport report;
};

/// voxelize -> featurize -> both branches -> fuse -> decode -> devoxelize.
/// Deterministic for fixed (cloud, cfg, params) and any worker count.
ForwardResult forward(const PointCloud& cloud, const LestConfig& cfg, const LestParams& params);

} // namespace lest
