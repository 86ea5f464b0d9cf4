// config.hpp — JSON run configuration: band/model serialization, preset
// expansion, deterministic config hashing

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluctuon/decay_curve.hpp"
#include "fluctuon/errors.hpp"
#include "fluctuon/experiment_fit.hpp"
#include "fluctuon/noise_model.hpp"

namespace fluctuon {

using json = nlohmann::json;

// Rates may be given in us^-1 (canonical) or s^-1; everything is converted
// to us^-1 at this boundary.
inline double rate_scale(const std::string& units) {
    if (units == "us^-1") return 1.0;
    if (units == "s^-1") return 1e-6;
    throw ConfigError("unknown rate units: '" + units + "' (use us^-1 or s^-1)");
}

inline NoiseBand band_from_json(const json& j) {
    try {
        const double scale = rate_scale(j.value("units", "us^-1"));
        return NoiseBand(j.at("n").get<int>(), j.at("sigma").get<double>(),
                         j.at("gamma_lo").get<double>() * scale,
                         j.at("gamma_hi").get<double>() * scale);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid band: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid band: ") + e.what());
    }
}

inline json band_to_json(const NoiseBand& band) {
    return json{{"n", band.n},
                {"sigma", band.sigma},
                {"gamma_lo", band.gamma_lo},
                {"gamma_hi", band.gamma_hi},
                {"units", "us^-1"}};
}

inline NoiseModel model_from_json(const json& j) {
    if (!j.contains("bands") || !j["bands"].is_array() || j["bands"].empty())
        throw ConfigError("noise_model needs a non-empty 'bands' array");
    std::vector<NoiseBand> bands;
    for (const auto& jb : j["bands"]) bands.push_back(band_from_json(jb));
    return NoiseModel(std::move(bands));
}

inline json model_to_json(const NoiseModel& model) {
    json bands = json::array();
    for (const auto& band : model.bands) bands.push_back(band_to_json(band));
    return json{{"bands", bands}};
}

/// FNV-1a hash of the resolved configuration dump; recorded in every output
/// header so artifacts are traceable to their exact inputs.
inline std::uint64_t config_hash(const json& resolved) {
    const std::string dump = resolved.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string config_hash_hex(const json& resolved) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(resolved)));
    return std::string(buf);
}

inline Protocol protocol_from_string(const std::string& s) {
    if (s == "fid") return Protocol::fid;
    if (s == "echo") return Protocol::echo;
    throw ConfigError("unknown protocol: '" + s + "' (use fid or echo)");
}

inline std::vector<double> grid_from_json(const json& j) {
    if (j.is_array()) {
        std::vector<double> grid = j.get<std::vector<double>>();
        if (grid.empty()) throw ConfigError("grid must be non-empty");
        return grid;
    }
    const double start = j.value("start", 0.0);
    const double stop = j.at("stop").get<double>();
    const int points = j.at("points").get<int>();
    if (points < 1) throw ConfigError("grid needs points >= 1");
    if (!(stop > start)) throw ConfigError("grid needs stop > start");
    const bool log_spaced = j.value("log", false);
    std::vector<double> grid(points);
    if (log_spaced) {
        if (!(start > 0.0)) throw ConfigError("log grid needs start > 0");
        const double ratio = std::log(stop / start);
        for (int i = 0; i < points; ++i)
            grid[i] = start * std::exp(ratio * (points == 1 ? 0.0 : double(i) / (points - 1)));
    } else {
        for (int i = 0; i < points; ++i)
            grid[i] = start + (stop - start) * (points == 1 ? 0.0 : double(i) / (points - 1));
    }
    return grid;
}

/// Two effective fluctuators plus the reference decay rates, either given
/// explicitly or expanded from a named preset.
struct ResolvedNoise {
    std::optional<NoiseModel> model;              // band-level description
    std::vector<EffectiveFluctuator> effective;   // reduced description
    double echo_rate = std::numeric_limits<double>::quiet_NaN();
    double v1 = std::numeric_limits<double>::quiet_NaN();
    double v2 = std::numeric_limits<double>::quiet_NaN();
    bool exponential_reference = false;
    std::string preset_name;
};

/// Expands `preset`/`noise_model`/`effective` blocks. `slow_only` keeps just
/// the n=1 band / first effective fluctuator.
inline ResolvedNoise resolve_noise(const json& cfg) {
    ResolvedNoise out;
    const bool slow_only = cfg.value("slow_only", false);

    if (cfg.contains("preset")) {
        const auto& preset = find_preset(cfg["preset"].get<std::string>());
        out.preset_name = preset.name;
        out.echo_rate = preset.echo_rate;
        out.v1 = preset.v1;
        out.v2 = preset.v2;
        out.exponential_reference = preset.exponential_decay;
        out.effective.push_back({preset.v1, preset.gamma_1}); // d_z = 1: a* carries v
        if (!slow_only) out.effective.push_back({preset.v2, preset.gamma_2});
        if (preset.has_bands()) {
            std::vector<NoiseBand> bands;
            bands.emplace_back(1, preset.v1, preset.gamma_m, preset.gamma_c);
            if (!slow_only) bands.emplace_back(2, preset.v2, preset.gamma_c, preset.gamma_0);
            out.model = NoiseModel(std::move(bands));
        }
    }
    if (cfg.contains("noise_model")) {
        NoiseModel model = model_from_json(cfg["noise_model"]);
        if (slow_only) {
            std::vector<NoiseBand> kept;
            for (const auto& band : model.bands)
                if (band.n == 1) kept.push_back(band);
            if (kept.empty()) throw ConfigError("slow_only: model has no n=1 band");
            model = NoiseModel(std::move(kept));
        }
        out.model = std::move(model);
        if (out.effective.empty())
            for (const auto& band : out.model->bands)
                out.effective.push_back(effective_fluctuator(band));
    }
    if (cfg.contains("effective")) {
        out.effective.clear();
        for (const auto& je : cfg["effective"]) {
            const double gamma = je.at("gamma").get<double>();
            const double v = je.contains("v") ? je["v"].get<double>() : je.at("a").get<double>();
            if (!(gamma > 0.0) || !(v >= 0.0))
                throw ConfigError("effective fluctuator needs gamma > 0 and v >= 0");
            out.effective.push_back({v, gamma});
        }
        if (slow_only && out.effective.size() > 1) out.effective.resize(1);
    }
    if (!out.model && out.effective.empty())
        throw ConfigError("config needs a 'preset', 'noise_model', or 'effective' block");
    return out;
}

inline json load_config_file(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw IoError("cannot open config file: " + path);
    try {
        return json::parse(file, nullptr, true, true); // allow comments
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error in ") + path + ": " + e.what());
    }
}

} // namespace fluctuon
