#include "lest/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "lest/errors.hpp"
#include "lest/rng.hpp"

namespace lest {

namespace {

constexpr std::uint32_t kMortonLimit = 1u << 21;

// Spreads the low 21 bits of v so bit b lands at position 3b.
inline std::uint64_t spread_bits_3(std::uint64_t v) {
    v &= 0x1fffff;
    v = (v | (v << 32)) & 0x1f00000000ffffULL;
    v = (v | (v << 16)) & 0x1f0000ff0000ffULL;
    v = (v | (v << 8)) & 0x100f00f00f00f00fULL;
    v = (v | (v << 4)) & 0x10c30c30c30c30c3ULL;
    v = (v | (v << 2)) & 0x1249249249249249ULL;
    return v;
}

GroupAssignment assignment_from_group_of(std::vector<std::uint32_t> group_of,
                                         std::size_t n_groups) {
    GroupAssignment ga;
    ga.group_of = std::move(group_of);
    ga.n_groups = n_groups;

    std::vector<std::uint32_t> counts(n_groups, 0);
    for (std::uint32_t g : ga.group_of) {
        ++counts[g];
    }
    ga.group_begin.assign(n_groups + 1, 0);
    for (std::size_t g = 0; g < n_groups; ++g) {
        ga.group_begin[g + 1] = ga.group_begin[g] + counts[g];
    }
    // bucket voxels by group, preserving original order within a group
    ga.perm.resize(ga.group_of.size());
    std::vector<std::uint32_t> cursor(ga.group_begin.begin(), ga.group_begin.end() - 1);
    for (std::uint32_t v = 0; v < ga.group_of.size(); ++v) {
        ga.perm[cursor[ga.group_of[v]]++] = v;
    }
    return ga;
}

} // namespace

std::uint64_t morton3(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) {
    if (ix >= kMortonLimit || iy >= kMortonLimit || iz >= kMortonLimit) {
        throw ContractError("morton3: coordinate out of range (must be < 2^21)");
    }
    return spread_bits_3(ix) | (spread_bits_3(iy) << 1) | (spread_bits_3(iz) << 2);
}

void GroupAssignment::validate() const {
    if (group_of.size() != perm.size() || group_begin.size() != n_groups + 1 ||
        group_begin.front() != 0 || group_begin.back() != perm.size()) {
        throw ContractError("GroupAssignment: inconsistent sizes");
    }
    std::vector<bool> seen(perm.size(), false);
    for (std::size_t g = 0; g < n_groups; ++g) {
        for (std::uint32_t t = group_begin[g]; t < group_begin[g + 1]; ++t) {
            const std::uint32_t v = perm[t];
            if (v >= perm.size() || seen[v] || group_of[v] != g) {
                throw ContractError("GroupAssignment: perm is not a consistent partition");
            }
            seen[v] = true;
        }
    }
}

GroupAssignment sfc_group(const VoxelSet& voxels, std::size_t capacity, std::array<int, 3> shift) {
    if (capacity < 1) {
        throw ContractError("sfc_group: capacity must be >= 1");
    }
    const std::size_t n = voxels.size();

    std::vector<std::uint64_t> key(n);
    for (std::size_t v = 0; v < n; ++v) {
        std::uint32_t shifted[3];
        for (int a = 0; a < 3; ++a) {
            const std::int64_t c = static_cast<std::int64_t>(voxels.coords[v][a]) + shift[a];
            if (c < 0 || c >= static_cast<std::int64_t>(kMortonLimit)) {
                throw ContractError("sfc_group: shifted coordinate out of Morton range");
            }
            shifted[a] = static_cast<std::uint32_t>(c);
        }
        key[v] = morton3(shifted[0], shifted[1], shifted[2]);
    }

    GroupAssignment ga;
    ga.perm.resize(n);
    std::iota(ga.perm.begin(), ga.perm.end(), 0u);
    std::sort(ga.perm.begin(), ga.perm.end(), [&](std::uint32_t a, std::uint32_t b) {
        return key[a] != key[b] ? key[a] < key[b] : a < b;
    });

    ga.group_size_cap = capacity;
    ga.n_groups = n == 0 ? 0 : (n + capacity - 1) / capacity;
    ga.group_of.resize(n);
    ga.group_begin.resize(ga.n_groups + 1);
    ga.group_begin[0] = 0;
    for (std::size_t t = 0; t < n; ++t) {
        ga.group_of[ga.perm[t]] = static_cast<std::uint32_t>(t / capacity);
    }
    for (std::size_t g = 0; g < ga.n_groups; ++g) {
        ga.group_begin[g + 1] = static_cast<std::uint32_t>(std::min(n, (g + 1) * capacity));
    }
    return ga;
}

GroupAssignment window_group(const VoxelSet& voxels, std::array<std::uint32_t, 3> window) {
    for (int a = 0; a < 3; ++a) {
        if (window[a] < 1) {
            throw ContractError("window_group: window dims must be >= 1");
        }
    }
    const std::size_t n = voxels.size();
    std::vector<std::uint32_t> group_of(n);
    std::unordered_map<std::uint64_t, std::uint32_t> id_of_key;
    id_of_key.reserve(n);
    std::uint32_t next_id = 0;
    for (std::size_t v = 0; v < n; ++v) {
        const std::uint64_t wx = voxels.coords[v][0] / window[0];
        const std::uint64_t wy = voxels.coords[v][1] / window[1];
        const std::uint64_t wz = voxels.coords[v][2] / window[2];
        const std::uint64_t key = (wx << 42) | (wy << 21) | wz;
        auto [it, inserted] = id_of_key.try_emplace(key, next_id);
        if (inserted) {
            ++next_id;
        }
        group_of[v] = it->second;
    }
    return assignment_from_group_of(std::move(group_of), next_id);
}

GroupAssignment kmeans_group(const VoxelSet& voxels, std::size_t n_clusters, std::uint64_t seed,
                             std::size_t max_iter) {
    const std::size_t n = voxels.size();
    if (n_clusters < 1 || n_clusters > n) {
        throw ContractError("kmeans_group: need 1 <= G <= number of voxels");
    }

    // voxel centers in index space
    std::vector<std::array<double, 3>> pt(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (int a = 0; a < 3; ++a) {
            pt[v][a] = voxels.coords[v][a] + 0.5;
        }
    }
    auto sq_dist = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
        return dx * dx + dy * dy + dz * dz;
    };

    // k-means++ seeding
    SplitMix64 rng(named_seed(seed, "kmeans.init"));
    std::vector<std::array<double, 3>> centers;
    centers.reserve(n_clusters);
    centers.push_back(pt[rng.below(n)]);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    while (centers.size() < n_clusters) {
        double total = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            best[v] = std::min(best[v], sq_dist(pt[v], centers.back()));
            total += best[v];
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t v = 0; v < n; ++v) {
                acc += best[v];
                if (acc > target) {
                    chosen = v;
                    break;
                }
            }
        } else {
            chosen = rng.below(n); // all points coincide with a center already
        }
        centers.push_back(pt[chosen]);
    }

    // Lloyd iterations; ties go to the lowest cluster index
    std::vector<std::uint32_t> assign(n, 0);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t v = 0; v < n; ++v) {
            double d_best = std::numeric_limits<double>::infinity();
            std::uint32_t g_best = 0;
            for (std::size_t c = 0; c < n_clusters; ++c) {
                const double d = sq_dist(pt[v], centers[c]);
                if (d < d_best) {
                    d_best = d;
                    g_best = static_cast<std::uint32_t>(c);
                }
            }
            if (assign[v] != g_best) {
                assign[v] = g_best;
                changed = true;
            }
        }
        if (!changed && iter > 0) {
            break;
        }
        std::vector<std::array<double, 3>> sum(n_clusters, {0.0, 0.0, 0.0});
        std::vector<std::size_t> count(n_clusters, 0);
        for (std::size_t v = 0; v < n; ++v) {
            for (int a = 0; a < 3; ++a) {
                sum[assign[v]][a] += pt[v][a];
            }
            ++count[assign[v]];
        }
        for (std::size_t c = 0; c < n_clusters; ++c) {
            if (count[c] > 0) { // empty clusters keep their center
                for (int a = 0; a < 3; ++a) {
                    centers[c][a] = sum[c][a] / static_cast<double>(count[c]);
                }
            }
        }
    }
    return assignment_from_group_of(std::move(assign), n_clusters);
}

GroupStats group_stats(const GroupAssignment& assignment) {
    GroupStats s;
    s.sizes.resize(assignment.n_groups);
    for (std::size_t g = 0; g < assignment.n_groups; ++g) {
        s.sizes[g] = assignment.group_begin[g + 1] - assignment.group_begin[g];
    }
    if (assignment.n_groups == 0) {
        return s;
    }
    const double g_count = static_cast<double>(assignment.n_groups);
    s.mean = static_cast<double>(assignment.perm.size()) / g_count;
    for (std::size_t size : s.sizes) {
        const double d = static_cast<double>(size) - s.mean;
        s.variance += d * d;
        s.seq_cost += static_cast<double>(size) * static_cast<double>(size);
        s.max_size = std::max(s.max_size, size);
    }
    s.variance /= g_count;
    s.padded_cost = g_count * static_cast<double>(s.max_size) * static_cast<double>(s.max_size);
    return s;
}

std::array<std::uint32_t, 3> choose_window_for_group_count(const VoxelSet& voxels,
                                                           std::size_t target_groups) {
    if (voxels.size() == 0) {
        throw ContractError("choose_window_for_group_count: empty voxel set");
    }
    const std::uint32_t z_span = kMortonLimit - 1; // pillar windows: one slab over all z
    auto groups_for = [&](std::uint32_t w) {
        return window_group(voxels, {w, w, z_span}).n_groups;
    };
    // occupied-window count is non-increasing in w; find the largest w that
    // still yields at least target_groups groups
    std::uint32_t lo = 1, hi = 1;
    while (groups_for(hi) >= target_groups && hi < (1u << 12)) {
        lo = hi;
        hi *= 2;
    }
    while (lo + 1 < hi) {
        const std::uint32_t mid = lo + (hi - lo) / 2;
        if (groups_for(mid) >= target_groups) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return {lo, lo, z_span};
}

} // namespace lest
