#include "lest/point_cloud.hpp"

#include <cmath>
#include <string>

#include "lest/binary_io.hpp"
#include "lest/errors.hpp"
#include "lest/rng.hpp"

namespace lest {

namespace {

constexpr std::size_t kPointRecordBytes = 16;

void check_finite(const Point& p, std::size_t index) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.intensity)) {
        throw DataError("non-finite value in point record " + std::to_string(index));
    }
}

} // namespace

void PointCloud::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        check_finite(points[i], i);
    }
    if (labels && labels->size() != points.size()) {
        throw ContractError("label count " + std::to_string(labels->size()) +
                            " does not match point count " + std::to_string(points.size()));
    }
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() % kPointRecordBytes != 0) {
        throw MalformedFileError(path.string() + ": size " + std::to_string(bytes.size()) +
                                 " is not a multiple of " + std::to_string(kPointRecordBytes));
    }
    PointCloud cloud;
    const std::size_t n = bytes.size() / kPointRecordBytes;
    cloud.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* rec = bytes.data() + i * kPointRecordBytes;
        Point& p = cloud.points[i];
        p.x = load_le_f32(rec);
        p.y = load_le_f32(rec + 4);
        p.z = load_le_f32(rec + 8);
        p.intensity = load_le_f32(rec + 12);
        check_finite(p, i);
    }
    return cloud;
}

void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    cloud.validate();
    std::vector<unsigned char> bytes(cloud.points.size() * kPointRecordBytes);
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        unsigned char* rec = bytes.data() + i * kPointRecordBytes;
        const Point& p = cloud.points[i];
        store_le_f32(rec, p.x);
        store_le_f32(rec + 4, p.y);
        store_le_f32(rec + 8, p.z);
        store_le_f32(rec + 12, p.intensity);
    }
    write_file_bytes(path, bytes);
}

std::vector<std::uint32_t> read_labels(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() % 4 != 0) {
        throw MalformedFileError(path.string() + ": size " + std::to_string(bytes.size()) +
                                 " is not a multiple of 4");
    }
    std::vector<std::uint32_t> labels(bytes.size() / 4);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = load_le_u32(bytes.data() + 4 * i) & 0xFFFFu;
    }
    return labels;
}

void write_labels(const std::filesystem::path& path, const std::vector<std::uint32_t>& labels) {
    std::vector<unsigned char> bytes(labels.size() * 4);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        store_le_u32(bytes.data() + 4 * i, labels[i] & 0xFFFFu);
    }
    write_file_bytes(path, bytes);
}

SceneProfile scene_profile_from_string(std::string_view name) {
    if (name == "uniform") {
        return SceneProfile::uniform;
    }
    if (name == "ring_lidar") {
        return SceneProfile::ring_lidar;
    }
    throw ContractError("unknown scene profile: " + std::string(name));
}

std::string_view to_string(SceneProfile profile) {
    return profile == SceneProfile::uniform ? "uniform" : "ring_lidar";
}

namespace {

PointCloud generate_uniform(SplitMix64& rng, std::size_t n_points) {
    PointCloud cloud;
    cloud.points.resize(n_points);
    for (auto& p : cloud.points) {
        p.x = static_cast<float>(rng.uniform(-50.0, 50.0));
        p.y = static_cast<float>(rng.uniform(-50.0, 50.0));
        p.z = static_cast<float>(rng.uniform(-2.0, 4.0));
        p.intensity = static_cast<float>(rng.uniform());
    }
    return cloud;
}

PointCloud generate_ring_lidar(SplitMix64& rng, std::size_t n_points) {
    constexpr int kRings = 64;
    constexpr double kSensorHeight = 2.0;
    constexpr double kPhiMin = 0.0267; // rad, ground radius ~75 m
    constexpr double kPhiMax = 0.4363; // rad, ground radius ~4.3 m

    double radius[kRings];
    for (int k = 0; k < kRings; ++k) {
        const double phi = kPhiMin + (kPhiMax - kPhiMin) * k / (kRings - 1);
        radius[k] = kSensorHeight / std::tan(phi);
    }

    PointCloud cloud;
    cloud.points.resize(n_points);
    constexpr double kTwoPi = 6.283185307179586;
    for (std::size_t i = 0; i < n_points; ++i) {
        const double rho0 = radius[i % kRings];
        const double theta = kTwoPi * rng.uniform();
        const double rho = rho0 * (1.0 + 0.02 * rng.uniform(-1.0, 1.0));
        const double z = 0.3 * rng.uniform(-1.0, 1.0);
        Point& p = cloud.points[i];
        p.x = static_cast<float>(rho * std::cos(theta));
        p.y = static_cast<float>(rho * std::sin(theta));
        p.z = static_cast<float>(z);
        p.intensity = static_cast<float>(rng.uniform());
    }
    return cloud;
}

} // namespace

PointCloud generate_synthetic_scene(std::uint64_t seed, std::size_t n_points, SceneProfile profile) {
    SplitMix64 rng(named_seed(seed, profile == SceneProfile::uniform ? "scene.uniform"
                                                                     : "scene.ring_lidar"));
    return profile == SceneProfile::uniform ? generate_uniform(rng, n_points)
                                            : generate_ring_lidar(rng, n_points);
}

} // namespace lest
