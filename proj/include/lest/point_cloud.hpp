#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace lest {

struct Point {
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;
    float intensity = 0.0f;

    bool operator==(const Point&) const = default;
};

/// Raw per-point records. Coordinates are meters, intensity is unitless in
/// [0,1]. Labels, when present, are per-point semantic class ids and must
/// match the point count.
struct PointCloud {
    std::vector<Point> points;
    std::optional<std::vector<std::uint32_t>> labels;

    std::size_t size() const { return points.size(); }

    /// Throws DataError on non-finite coordinates, ContractError on a
    /// label/point count mismatch.
    void validate() const;
};

// On-disk format: packed records of 4 x float32 LE (x, y, z, intensity).
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);

// Label files: packed uint32 LE, semantic class = value & 0xFFFF. The upper
// halfword (instance id in the dataset convention) is discarded on read and
// written as zero.
std::vector<std::uint32_t> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<std::uint32_t>& labels);

enum class SceneProfile {
    uniform,   ///< points uniform in a box
    ring_lidar ///< concentric rings, dense near the sensor, sparse far out
};

SceneProfile scene_profile_from_string(std::string_view name);
std::string_view to_string(SceneProfile profile);

/// Deterministic synthetic scene: a pure function of (seed, n_points, profile),
/// bit-identical across runs of the same build. The exact construction is
/// documented in the README so benchmark numbers can be reproduced.
///
/// ring_lidar: a 64-beam spinning sensor at height 2 m. Beam k gets elevation
/// angle phi_k linearly spaced in [0.0267, 0.4363] rad and hits the ground at
/// radius 2/tan(phi_k) (about 4.3 m to 75 m). Point i lands on ring i mod 64
/// with uniform azimuth, +-2% radial jitter and +-0.3 m height jitter. Equal
/// point counts on rings whose radii crowd toward the sensor reproduce the
/// near-dense / far-sparse density of real LiDAR scans.
///
/// uniform: x, y in [-50, 50), z in [-2, 4), intensity in [0, 1).
PointCloud generate_synthetic_scene(std::uint64_t seed, std::size_t n_points, SceneProfile profile);

} // namespace lest
