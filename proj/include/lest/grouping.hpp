#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lest/voxelizer.hpp"

namespace lest {

/// 63-bit Morton (Z-order) code: bit 3b of the result is bit b of ix, bit 3b+1
/// is bit b of iy, bit 3b+2 is bit b of iz. Coordinates must be < 2^21.
std::uint64_t morton3(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz);

/// A partition of the voxels into groups. perm lists voxel ids so that each
/// group's members are contiguous; group_begin[g] .. group_begin[g+1] is the
/// slice of perm belonging to group g.
struct GroupAssignment {
    std::vector<std::uint32_t> perm;
    std::vector<std::uint32_t> group_of;
    std::vector<std::uint32_t> group_begin; ///< n_groups + 1 offsets into perm
    std::size_t group_size_cap = 0;         ///< S for the SFC grouper, 0 otherwise
    std::size_t n_groups = 0;

    std::size_t n_items() const { return perm.size(); }
    void validate() const; ///< throws ContractError if the partition is inconsistent
};

/// Per-assignment balance statistics. seq_cost = sum of squared group sizes
/// (sequential grouped-attention cost in pair evaluations); padded_cost =
/// n_groups * max_size^2 (cost when every group is padded to the largest).
struct GroupStats {
    std::vector<std::size_t> sizes;
    double mean = 0.0;
    double variance = 0.0; ///< population variance of the group sizes
    std::size_t max_size = 0;
    double seq_cost = 0.0;
    double padded_cost = 0.0;
};

/// Sorts voxels by morton3(coords + shift), ties broken by original voxel
/// index, and cuts the sequence into groups of exactly `capacity` (the last
/// group holds the remainder). Shifted coordinates must stay inside the
/// Morton range.
GroupAssignment sfc_group(const VoxelSet& voxels, std::size_t capacity,
                          std::array<int, 3> shift = {0, 0, 0});

/// Fixed windows of `window` voxels per axis: group key = coords / window,
/// group ids in first-appearance order.
GroupAssignment window_group(const VoxelSet& voxels, std::array<std::uint32_t, 3> window);

/// Lloyd's algorithm over voxel centers (index space + 0.5), k-means++ init
/// from a seeded generator. Stops when assignments stabilize or after
/// max_iter rounds. Groups may end up empty; n_groups stays G.
GroupAssignment kmeans_group(const VoxelSet& voxels, std::size_t n_clusters, std::uint64_t seed,
                             std::size_t max_iter = 50);

GroupStats group_stats(const GroupAssignment& assignment);

/// Largest window edge (w, w, span-all-z) whose occupied-window count is
/// still >= target_groups; the shape mirrors pillar-style fixed windows.
/// Used by benchmarks to compare groupers at comparable group counts.
std::array<std::uint32_t, 3> choose_window_for_group_count(const VoxelSet& voxels,
                                                           std::size_t target_groups);

} // namespace lest
