#include "lest/voxelizer.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "lest/errors.hpp"
#include "lest/parallel.hpp"
#include "lest/rng.hpp"

namespace lest {

void VoxelGridSpec::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (!(voxel_size[a] > 0.0) || !std::isfinite(voxel_size[a])) {
            throw ContractError("voxel_size must be positive and finite on every axis");
        }
        if (!std::isfinite(origin[a])) {
            throw ContractError("grid origin must be finite");
        }
        if (max_coord[a] >= (1u << 21)) {
            throw ContractError("grid max_coord must be < 2^21 per axis");
        }
    }
}

MiniPointNetParams MiniPointNetParams::init(std::size_t hidden, std::size_t channels,
                                            std::uint64_t seed) {
    MiniPointNetParams p;
    p.seed = seed;
    SplitMix64 rng(named_seed(seed, "pointnet.weights"));
    p.w1 = init_linear_weight(kInputDim, hidden, rng);
    p.b1 = init_linear_bias(kInputDim, hidden, rng);
    p.w2 = init_linear_weight(hidden, channels, rng);
    p.b2 = init_linear_bias(hidden, channels, rng);
    return p;
}

namespace {

// Packs a bounded (ix, iy, iz) into one key; coordinates are < 2^21.
inline std::uint64_t pack_coords(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) {
    return (static_cast<std::uint64_t>(ix) << 42) | (static_cast<std::uint64_t>(iy) << 21) |
           static_cast<std::uint64_t>(iz);
}

} // namespace

VoxelSet assign_voxels(const PointCloud& cloud, const VoxelGridSpec& spec) {
    spec.validate();
    cloud.validate();

    VoxelSet out;
    out.spec = spec;
    out.n_points = cloud.size();
    out.voxel_of_point.assign(cloud.size(), -1);

    std::unordered_map<std::uint64_t, std::uint32_t> voxel_id;
    voxel_id.reserve(cloud.size());

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point& p = cloud.points[i];
        const double rel[3] = {p.x - spec.origin[0], p.y - spec.origin[1], p.z - spec.origin[2]};
        std::uint32_t idx[3];
        bool in_bounds = true;
        for (int a = 0; a < 3 && in_bounds; ++a) {
            const double cell = std::floor(rel[a] / spec.voxel_size[a]);
            if (cell < 0.0 || cell > static_cast<double>(spec.max_coord[a])) {
                in_bounds = false;
            } else {
                idx[a] = static_cast<std::uint32_t>(cell);
            }
        }
        if (!in_bounds) {
            ++out.n_dropped;
            continue;
        }
        const std::uint64_t key = pack_coords(idx[0], idx[1], idx[2]);
        auto [it, inserted] = voxel_id.try_emplace(key, static_cast<std::uint32_t>(out.coords.size()));
        if (inserted) {
            out.coords.push_back({idx[0], idx[1], idx[2]});
            out.point_index.emplace_back();
        }
        out.point_index[it->second].push_back(static_cast<std::uint32_t>(i));
        out.voxel_of_point[i] = static_cast<std::int32_t>(it->second);
    }
    return out;
}

void featurize_voxels(VoxelSet& voxels, const PointCloud& cloud, const MiniPointNetParams& params,
                      int workers) {
    if (voxels.n_points != cloud.size()) {
        throw ContractError("featurize_voxels: cloud size does not match the voxelized cloud");
    }
    const std::size_t hidden = params.w1.cols();
    const std::size_t channels = params.w2.cols();
    if (params.w1.rows() != MiniPointNetParams::kInputDim || params.w2.rows() != hidden ||
        params.b1.size() != hidden || params.b2.size() != channels) {
        throw ContractError("featurize_voxels: inconsistent MiniPointNet parameter shapes");
    }

    voxels.features = Matrix(voxels.size(), channels);
    const VoxelGridSpec& spec = voxels.spec;

    parallel_for(voxels.size(), workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> h(hidden);
        std::vector<double> f(channels);
        for (std::size_t v = begin; v < end; ++v) {
            const auto& members = voxels.point_index[v];
            if (members.empty()) {
                throw ContractError("featurize_voxels: voxel with no member points");
            }
            double cx = spec.origin[0] + (voxels.coords[v][0] + 0.5) * spec.voxel_size[0];
            double cy = spec.origin[1] + (voxels.coords[v][1] + 0.5) * spec.voxel_size[1];
            double cz = spec.origin[2] + (voxels.coords[v][2] + 0.5) * spec.voxel_size[2];
            double* out_row = voxels.features.data() + v * channels;
            for (std::size_t c = 0; c < channels; ++c) {
                out_row[c] = -std::numeric_limits<double>::infinity();
            }
            for (std::uint32_t pi : members) {
                const Point& p = cloud.points[pi];
                const double in[4] = {p.x - cx, p.y - cy, p.z - cz, p.intensity};
                for (std::size_t j = 0; j < hidden; ++j) {
                    double acc = params.b1[j];
                    for (std::size_t k = 0; k < 4; ++k) {
                        acc += in[k] * params.w1(k, j);
                    }
                    h[j] = acc > 0.0 ? acc : 0.0;
                }
                for (std::size_t c = 0; c < channels; ++c) {
                    double acc = params.b2[c];
                    for (std::size_t j = 0; j < hidden; ++j) {
                        acc += h[j] * params.w2(j, c);
                    }
                    f[c] = acc > 0.0 ? acc : 0.0;
                }
                for (std::size_t c = 0; c < channels; ++c) {
                    if (f[c] > out_row[c]) {
                        out_row[c] = f[c];
                    }
                }
            }
        }
    });
}

Matrix devoxelize(const VoxelSet& voxels, const Matrix& per_voxel_logits) {
    if (per_voxel_logits.rows() != voxels.size()) {
        throw ContractError("devoxelize: logits rows " + std::to_string(per_voxel_logits.rows()) +
                            " != voxel count " + std::to_string(voxels.size()));
    }
    const std::size_t k = per_voxel_logits.cols();
    Matrix out(voxels.n_points, k, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < voxels.n_points; ++i) {
        const std::int32_t v = voxels.voxel_of_point[i];
        if (v < 0) {
            continue; // dropped point keeps its NaN ignore marker
        }
        const double* src = per_voxel_logits.data() + static_cast<std::size_t>(v) * k;
        double* dst = out.data() + i * k;
        for (std::size_t j = 0; j < k; ++j) {
            dst[j] = src[j];
        }
    }
    return out;
}

} // namespace lest
