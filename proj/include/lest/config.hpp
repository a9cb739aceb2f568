#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lest/lest_block.hpp"
#include "lest/voxelizer.hpp"

namespace lest {

/// The flat key-value run configuration. File format: one `key = value` per
/// line, dotted keys, `#` comments. Unknown keys are rejected; every key left
/// to its default is echoed in applied_defaults for provenance.
struct RunConfig {
    std::uint64_t seed = 0;
    int workers = 1;

    std::array<double, 3> voxel_size{0.0, 0.0, 0.0}; ///< required, no default
    std::array<double, 3> grid_origin{-120.0, -120.0, -20.0};
    std::array<std::uint32_t, 3> grid_max_coord{(1u << 21) - 1, (1u << 21) - 1, (1u << 21) - 1};

    std::size_t pointnet_hidden = 32;
    std::size_t pointnet_channels = 64;
    std::optional<std::uint64_t> pointnet_seed;

    std::size_t attention_dim = 64;
    std::size_t ffn_hidden = 128;
    std::size_t group_capacity = 48;
    std::vector<std::array<int, 3>> group_shifts; ///< default derived from capacity
    std::size_t layers_per_grid = 1;
    std::size_t classes = 16;
    std::size_t decoder_hidden = 64;
    GroupedMode grouped_mode = GroupedMode::sequential;

    bool ablation_single_grid = false;
    bool ablation_disable_disco = false;
    bool ablation_disable_channel_attention = false;

    /// "key = value" for every key the parser filled from its default.
    std::vector<std::string> applied_defaults;

    VoxelGridSpec grid_spec() const;
    LestConfig lest_config() const;

    /// Canonical text form. parse(dump()) reproduces the exact same values and
    /// dumps to the identical string.
    std::string dump() const;
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text, std::string_view source_name = "<config>");

} // namespace lest
