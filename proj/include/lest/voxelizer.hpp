#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lest/matrix.hpp"
#include "lest/point_cloud.hpp"

namespace lest {

/// Geometry of the sparse voxel grid. Integer voxel coordinates are bounded by
/// max_coord per axis; the bound must stay below 2^21 so that a 3-axis Morton
/// code fits in 63 bits.
struct VoxelGridSpec {
    std::array<double, 3> voxel_size{0.1, 0.1, 0.1};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    std::array<std::uint32_t, 3> max_coord{(1u << 21) - 1, (1u << 21) - 1, (1u << 21) - 1};

    void validate() const; ///< throws ContractError on non-positive sizes or oversized bounds
};

/// Sparse voxels in first-appearance order. coords are unique; the point_index
/// lists partition the kept points; voxel_of_point maps every input point to
/// its voxel (-1 when the point fell outside the grid and was dropped).
struct VoxelSet {
    std::vector<std::array<std::uint32_t, 3>> coords;
    Matrix features; ///< n_voxels x C once featurize_voxels has run, empty before
    std::vector<std::vector<std::uint32_t>> point_index;
    std::vector<std::int32_t> voxel_of_point;
    std::size_t n_points = 0;
    std::size_t n_dropped = 0;
    VoxelGridSpec spec;

    std::size_t size() const { return coords.size(); }
};

/// Two-layer per-point MLP pooled with a coordinatewise max. Weights are a
/// pure function of the seed.
struct MiniPointNetParams {
    Matrix w1; ///< in_dim x hidden
    std::vector<double> b1;
    Matrix w2; ///< hidden x channels
    std::vector<double> b2;
    std::uint64_t seed = 0;

    static constexpr std::size_t kInputDim = 4; // (dx, dy, dz, intensity) relative to voxel center

    static MiniPointNetParams init(std::size_t hidden, std::size_t channels, std::uint64_t seed);
};

/// Quantizes points onto the grid: voxel index = floor((p - origin) / size)
/// per axis. Out-of-bounds points are dropped and counted, never fatal.
/// Voxel order is the first-appearance order of the points.
VoxelSet assign_voxels(const PointCloud& cloud, const VoxelGridSpec& spec);

/// Fills `features`: row v = coordinatewise max over member points of
/// relu(relu(f W1 + b1) W2 + b2) with f the voxel-center-relative input
/// feature. Max-pooling is order-free, so the result is bit-identical for any
/// member order and any worker count.
void featurize_voxels(VoxelSet& voxels, const PointCloud& cloud, const MiniPointNetParams& params,
                      int workers = 1);

/// Scatters per-voxel logits back to points. Every point receives its voxel's
/// row unchanged; dropped points get a row of quiet NaN (the ignore marker).
Matrix devoxelize(const VoxelSet& voxels, const Matrix& per_voxel_logits);

} // namespace lest
