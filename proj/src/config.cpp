#include "lest/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lest/errors.hpp"

namespace lest {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& message) {
    throw ConfigError(std::string(source) + ":" + std::to_string(line) + ": " + message);
}

double parse_double(std::string_view v, std::string_view source, std::size_t line,
                    const std::string& key) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
        fail(source, line, "key '" + key + "': expected a finite number, got '" + std::string(v) + "'");
    }
    return out;
}

std::uint64_t parse_u64(std::string_view v, std::string_view source, std::size_t line,
                        const std::string& key) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        fail(source, line, "key '" + key + "': expected a non-negative integer, got '" +
                               std::string(v) + "'");
    }
    return out;
}

std::int64_t parse_i64(std::string_view v, std::string_view source, std::size_t line,
                       const std::string& key) {
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        fail(source, line, "key '" + key + "': expected an integer, got '" + std::string(v) + "'");
    }
    return out;
}

bool parse_bool(std::string_view v, std::string_view source, std::size_t line,
                const std::string& key) {
    if (v == "true") {
        return true;
    }
    if (v == "false") {
        return false;
    }
    fail(source, line, "key '" + key + "': expected true or false, got '" + std::string(v) + "'");
}

// "dx,dy,dz; dx,dy,dz; ..."
std::vector<std::array<int, 3>> parse_shifts(std::string_view v, std::string_view source,
                                             std::size_t line) {
    std::vector<std::array<int, 3>> shifts;
    std::string text(v);
    std::stringstream triples(text);
    std::string triple;
    while (std::getline(triples, triple, ';')) {
        std::stringstream parts(triple);
        std::string part;
        std::array<int, 3> shift{};
        int axis = 0;
        while (std::getline(parts, part, ',')) {
            if (axis >= 3) {
                fail(source, line, "group.shifts: more than three components in '" + triple + "'");
            }
            shift[axis++] = static_cast<int>(
                parse_i64(trim(part), source, line, "group.shifts"));
        }
        if (axis != 3) {
            fail(source, line, "group.shifts: expected dx,dy,dz in '" + triple + "'");
        }
        shifts.push_back(shift);
    }
    if (shifts.empty()) {
        fail(source, line, "group.shifts: empty list");
    }
    return shifts;
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string format_shifts(const std::vector<std::array<int, 3>>& shifts) {
    std::string out;
    for (std::size_t i = 0; i < shifts.size(); ++i) {
        if (i > 0) {
            out += ";";
        }
        out += std::to_string(shifts[i][0]) + "," + std::to_string(shifts[i][1]) + "," +
               std::to_string(shifts[i][2]);
    }
    return out;
}

} // namespace

RunConfig parse_config_text(std::string_view text, std::string_view source_name) {
    RunConfig cfg;
    std::map<std::string, std::pair<std::string, std::size_t>> entries; // key -> (value, line)

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            fail(source_name, line_no, "expected 'key = value', got '" + std::string(line) + "'");
        }
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        if (key.empty()) {
            fail(source_name, line_no, "empty key");
        }
        if (entries.count(key)) {
            fail(source_name, line_no, "duplicate key '" + key + "'");
        }
        entries[key] = {value, line_no};
    }

    auto take = [&](const std::string& key) -> std::optional<std::pair<std::string, std::size_t>> {
        auto it = entries.find(key);
        if (it == entries.end()) {
            return std::nullopt;
        }
        auto out = it->second;
        entries.erase(it);
        return out;
    };
    auto defaulted = [&cfg](const std::string& key, const std::string& value) {
        cfg.applied_defaults.push_back(key + " = " + value);
    };

    // required keys
    const char* axes = "xyz";
    for (int a = 0; a < 3; ++a) {
        const std::string key = std::string("voxel_size.") + axes[a];
        auto e = take(key);
        if (!e) {
            throw ConfigError(std::string(source_name) + ": missing required key '" + key + "'");
        }
        cfg.voxel_size[a] = parse_double(e->first, source_name, e->second, key);
        if (!(cfg.voxel_size[a] > 0.0)) {
            fail(source_name, e->second, "key '" + key + "': must be > 0");
        }
    }

    // everything below is optional with an echoed default
    if (auto e = take("seed")) {
        cfg.seed = parse_u64(e->first, source_name, e->second, "seed");
    } else {
        defaulted("seed", std::to_string(cfg.seed));
    }
    if (auto e = take("workers")) {
        const std::uint64_t w = parse_u64(e->first, source_name, e->second, "workers");
        if (w < 1 || w > 256) {
            fail(source_name, e->second, "key 'workers': must be in [1, 256]");
        }
        cfg.workers = static_cast<int>(w);
    } else {
        defaulted("workers", std::to_string(cfg.workers));
    }

    for (int a = 0; a < 3; ++a) {
        const std::string key = std::string("grid.origin.") + axes[a];
        if (auto e = take(key)) {
            cfg.grid_origin[a] = parse_double(e->first, source_name, e->second, key);
        } else {
            defaulted(key, format_double(cfg.grid_origin[a]));
        }
    }
    for (int a = 0; a < 3; ++a) {
        const std::string key = std::string("grid.max_coord.") + axes[a];
        if (auto e = take(key)) {
            const std::uint64_t v = parse_u64(e->first, source_name, e->second, key);
            if (v >= (1u << 21)) {
                fail(source_name, e->second, "key '" + key + "': must be < 2^21");
            }
            cfg.grid_max_coord[a] = static_cast<std::uint32_t>(v);
        } else {
            defaulted(key, std::to_string(cfg.grid_max_coord[a]));
        }
    }

    auto take_size = [&](const char* key, std::size_t& slot, std::size_t lo, std::size_t hi) {
        if (auto e = take(key)) {
            const std::uint64_t v = parse_u64(e->first, source_name, e->second, key);
            if (v < lo || v > hi) {
                fail(source_name, e->second,
                     "key '" + std::string(key) + "': must be in [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
            }
            slot = static_cast<std::size_t>(v);
        } else {
            defaulted(key, std::to_string(slot));
        }
    };
    take_size("pointnet.hidden", cfg.pointnet_hidden, 1, 4096);
    take_size("pointnet.channels", cfg.pointnet_channels, 1, 4096);
    if (auto e = take("pointnet.seed")) {
        cfg.pointnet_seed = parse_u64(e->first, source_name, e->second, "pointnet.seed");
    } else {
        defaulted("pointnet.seed", "(derived from seed)");
    }
    take_size("attention.dim", cfg.attention_dim, 1, 4096);
    take_size("ffn.hidden", cfg.ffn_hidden, 1, 65536);
    take_size("group.capacity", cfg.group_capacity, 1, 1u << 20);
    if (auto e = take("group.shifts")) {
        cfg.group_shifts = parse_shifts(e->first, source_name, e->second);
    } else {
        cfg.group_shifts = LestConfig::default_shifts(cfg.group_capacity);
        defaulted("group.shifts", format_shifts(cfg.group_shifts));
    }
    take_size("layers.per_grid", cfg.layers_per_grid, 1, 64);
    take_size("classes", cfg.classes, 1, 65536);
    take_size("decoder.hidden", cfg.decoder_hidden, 1, 65536);
    if (auto e = take("grouped.mode")) {
        try {
            cfg.grouped_mode = grouped_mode_from_string(e->first);
        } catch (const ContractError& err) {
            fail(source_name, e->second, err.what());
        }
    } else {
        defaulted("grouped.mode", std::string(to_string(cfg.grouped_mode)));
    }

    auto take_bool = [&](const char* key, bool& slot) {
        if (auto e = take(key)) {
            slot = parse_bool(e->first, source_name, e->second, key);
        } else {
            defaulted(key, slot ? "true" : "false");
        }
    };
    take_bool("ablation.single_grid", cfg.ablation_single_grid);
    take_bool("ablation.disable_disco", cfg.ablation_disable_disco);
    take_bool("ablation.disable_channel_attention", cfg.ablation_disable_channel_attention);

    if (!entries.empty()) {
        const auto& [key, value_line] = *entries.begin();
        fail(source_name, value_line.second, "unknown key '" + key + "'");
    }

    if (cfg.attention_dim != cfg.pointnet_channels) {
        throw ConfigError(std::string(source_name) +
                          ": attention.dim must equal pointnet.channels (encoder residual)");
    }
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

VoxelGridSpec RunConfig::grid_spec() const {
    VoxelGridSpec spec;
    spec.voxel_size = voxel_size;
    spec.origin = grid_origin;
    spec.max_coord = grid_max_coord;
    return spec;
}

LestConfig RunConfig::lest_config() const {
    LestConfig cfg;
    cfg.grid = grid_spec();
    cfg.channels = pointnet_channels;
    cfg.attn_dim = attention_dim;
    cfg.ffn_hidden = ffn_hidden;
    cfg.pointnet_hidden = pointnet_hidden;
    cfg.group_capacity = group_capacity;
    cfg.shifts = group_shifts;
    cfg.layers_per_grid = layers_per_grid;
    cfg.n_classes = classes;
    cfg.decoder_hidden = decoder_hidden;
    cfg.grouped_mode = grouped_mode;
    cfg.single_grid = ablation_single_grid;
    cfg.disable_disco = ablation_disable_disco;
    cfg.disable_channel_attention = ablation_disable_channel_attention;
    cfg.seed = seed;
    cfg.pointnet_seed = pointnet_seed;
    cfg.workers = workers;
    return cfg;
}

std::string RunConfig::dump() const {
    std::ostringstream out;
    out << "seed = " << seed << '\n';
    out << "workers = " << workers << '\n';
    const char* axes = "xyz";
    for (int a = 0; a < 3; ++a) {
        out << "voxel_size." << axes[a] << " = " << format_double(voxel_size[a]) << '\n';
    }
    for (int a = 0; a < 3; ++a) {
        out << "grid.origin." << axes[a] << " = " << format_double(grid_origin[a]) << '\n';
    }
    for (int a = 0; a < 3; ++a) {
        out << "grid.max_coord." << axes[a] << " = " << grid_max_coord[a] << '\n';
    }
    out << "pointnet.hidden = " << pointnet_hidden << '\n';
    out << "pointnet.channels = " << pointnet_channels << '\n';
    if (pointnet_seed) {
        out << "pointnet.seed = " << *pointnet_seed << '\n';
    }
    out << "attention.dim = " << attention_dim << '\n';
    out << "ffn.hidden = " << ffn_hidden << '\n';
    out << "group.capacity = " << group_capacity << '\n';
    out << "group.shifts = " << format_shifts(group_shifts) << '\n';
    out << "layers.per_grid = " << layers_per_grid << '\n';
    out << "classes = " << classes << '\n';
    out << "decoder.hidden = " << decoder_hidden << '\n';
    out << "grouped.mode = " << to_string(grouped_mode) << '\n';
    out << "ablation.single_grid = " << (ablation_single_grid ? "true" : "false") << '\n';
    out << "ablation.disable_disco = " << (ablation_disable_disco ? "true" : "false") << '\n';
    out << "ablation.disable_channel_attention = "
        << (ablation_disable_channel_attention ? "true" : "false") << '\n';
    return out.str();
}

} // namespace lest
