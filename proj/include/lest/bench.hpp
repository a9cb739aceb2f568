#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lest/grouping.hpp"
#include "lest/point_cloud.hpp"
#include "lest/voxelizer.hpp"

namespace lest {

/// Grouping balance benchmark over seeded synthetic scenes. Emits one CSV row
/// of GroupStats per grouper per seed plus the padded-transformer cost model
/// G*M^2*D and the measured wall time of grouped softmax attention under that
/// assignment. All columns except attn_seconds are pure functions of the
/// parameters.
struct GroupingBenchParams {
    SceneProfile profile = SceneProfile::ring_lidar;
    std::size_t n_points = 100000;
    std::vector<std::uint64_t> seeds = {1};
    VoxelGridSpec grid{{0.3, 0.3, 0.3}, {-80.0, -80.0, -8.0}};
    std::vector<std::string> groupers = {"sfc", "window", "kmeans"};
    std::size_t sfc_capacity = 48;
    std::array<int, 3> shift = {0, 0, 0};
    /// all-zero => pick an edge giving a group count comparable to the SFC grouper
    std::array<std::uint32_t, 3> window = {0, 0, 0};
    std::size_t kmeans_groups = 0; ///< 0 => match the SFC group count
    std::size_t kmeans_max_iter = 25;
    std::size_t attn_dim = 32;
    bool measure_attention = true;
    int workers = 1;
};

std::string bench_grouping_csv(const GroupingBenchParams& params);

/// Wall-time scaling of attention variants over a ladder of token counts.
/// seconds is the median of `reps` runs; ratio is seconds relative to the
/// previous (smaller) N for the same variant, empty for the first entry.
struct ScalingBenchParams {
    std::vector<std::size_t> n_values = {4096, 8192, 16384, 32768, 65536};
    std::size_t dim = 32;
    /// softmax | kernel | cosformer | disco | disco_oracle (quadratic route)
    std::vector<std::string> variants = {"disco", "disco_oracle"};
    std::uint64_t seed = 1;
    int reps = 5;
    int workers = 1;
};

std::string bench_attention_scaling_csv(const ScalingBenchParams& params);

/// Median wall time of one attention variant at (n, dim); the building block
/// of the scaling bench, exposed for the acceptance suite.
double time_attention_variant(const std::string& variant, std::size_t n, std::size_t dim,
                              std::uint64_t seed, int reps, int workers);

/// Wall time of block-diagonal softmax attention over the given assignment on
/// seeded random features (n_voxels x dim).
double time_grouped_attention(const GroupAssignment& ga, std::size_t n_voxels, std::size_t dim,
                              std::uint64_t seed, int workers);

} // namespace lest
