// SPDX-License-Identifier: Apache-2.0
//
// nfloc: near-field scatterer sensing and NLoS UE localization
// Copyright (C) 2026 The nfloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#ifndef NFLOC_CONFIG_IO_HPP
#define NFLOC_CONFIG_IO_HPP

// JSON experiment configuration. Requires nlohmann/json ("json.hpp") on the include path.

#include "nfloc/experiment.hpp"

#include "json.hpp"

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace nfloc {

using Json = nlohmann::json;

namespace detail {

// Rejects keys outside `allowed` so that typos fail loudly.
inline void check_keys(const Json &j, const std::string &where, std::initializer_list<const char *> allowed) {
    if (!j.is_object())
        throw ConfigError("'" + where + "' must be a JSON object");
    for (const auto &item : j.items()) {
        bool known = false;
        for (const char *k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("unknown key '" + item.key() + "' in '" + where + "'");
    }
}

template <typename T> void read(const Json &j, const char *key, const std::string &where, T &out) {
    const auto it = j.find(key);
    if (it == j.end())
        return;
    try {
        if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<long long>() >= 0))
                throw ConfigError(where + "." + key + " must be a non-negative integer");
        }
        out = it->template get<T>();
    } catch (const Json::exception &e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline double read_deg(const Json &j, const char *key, const std::string &where, double radians) {
    double deg = rad_to_deg(radians);
    read(j, key, where, deg);
    return deg_to_rad(deg);
}

template <typename E>
E parse_enum(const std::string &text, const std::string &where,
             std::initializer_list<std::pair<const char *, E>> names) {
    for (const auto &[name, value] : names)
        if (text == name)
            return value;
    std::string expected;
    for (const auto &[name, value] : names)
        expected += (expected.empty() ? "" : "|") + std::string(name);
    throw ConfigError(where + ": '" + text + "' is not one of " + expected);
}

inline Modulation parse_modulation(const std::string &s, const std::string &where) {
    return parse_enum<Modulation>(s, where, {{"qpsk", Modulation::qpsk}, {"qam16", Modulation::qam16}});
}

inline Window parse_window(const std::string &s, const std::string &where) {
    return parse_enum<Window>(s, where, {{"hamming", Window::hamming}, {"rectangular", Window::rectangular}});
}

inline GainPolicy parse_gain_policy(const std::string &s, const std::string &where) {
    return parse_enum<GainPolicy>(s, where, {{"unit", GainPolicy::unit}, {"distance", GainPolicy::distance}});
}

inline ModelOrderRule::Kind parse_order_kind(const std::string &s, const std::string &where) {
    return parse_enum<ModelOrderRule::Kind>(s, where,
                                            {{"known", ModelOrderRule::Kind::known},
                                             {"ratio", ModelOrderRule::Kind::eigen_ratio},
                                             {"mdl", ModelOrderRule::Kind::mdl}});
}

inline std::string to_string(GainPolicy p) { return p == GainPolicy::unit ? "unit" : "distance"; }

inline Position2D read_pair(const Json &j, const char *key, const std::string &where, Position2D fallback) {
    const auto it = j.find(key);
    if (it == j.end())
        return fallback;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
        throw ConfigError(where + "." + key + " must be a two-element numeric array");
    return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

inline void apply_waveform(WaveformConfig &w, const Json &j) {
    const std::string where = "waveform";
    check_keys(j, where,
               {"num_subcarriers", "subcarrier_spacing_hz", "bandwidth_hz", "num_symbols", "cp_samples",
                "transmit_power", "modulation"});
    if (j.contains("subcarrier_spacing_hz") && j.contains("bandwidth_hz"))
        throw ConfigError("waveform: give either subcarrier_spacing_hz or bandwidth_hz, not both");
    double bandwidth = w.bandwidth();
    read(j, "num_subcarriers", where, w.num_subcarriers);
    read(j, "bandwidth_hz", where, bandwidth);
    // Without an explicit spacing the bandwidth is held fixed when N changes.
    if (w.num_subcarriers > 0)
        w.subcarrier_spacing = bandwidth / static_cast<double>(w.num_subcarriers);
    read(j, "subcarrier_spacing_hz", where, w.subcarrier_spacing);
    read(j, "num_symbols", where, w.num_symbols);
    read(j, "cp_samples", where, w.cp_samples);
    read(j, "transmit_power", where, w.transmit_power);
    if (j.contains("modulation")) {
        std::string m;
        read(j, "modulation", where, m);
        w.modulation = parse_modulation(m, where + ".modulation");
    }
}

inline void apply_array(ArrayConfig &a, const Json &j) {
    const std::string where = "array";
    check_keys(j, where, {"num_elements", "spacing_m", "carrier_frequency_hz"});
    read(j, "num_elements", where, a.num_elements);
    read(j, "spacing_m", where, a.spacing);
    read(j, "carrier_frequency_hz", where, a.carrier_frequency);
}

inline ScenarioConfig parse_scenario(const Json &j, std::size_t index) {
    const std::string where = "scenarios[" + std::to_string(index) + "]";
    check_keys(j, where, {"name", "preset", "scatterers", "ue", "clock_difference_s", "gain_policy"});
    if (j.contains("preset") == j.contains("scatterers"))
        throw ConfigError(where + ": exactly one of 'preset' or 'scatterers' is required");

    ScenarioConfig sc;
    if (j.contains("preset")) {
        std::string preset;
        read(j, "preset", where, preset);
        sc = preset_scenario(preset);
    } else {
        const Json &list = j.at("scatterers");
        if (!list.is_array() || list.empty())
            throw ConfigError(where + ".scatterers must be a non-empty array");
        sc.name = "custom" + std::to_string(index);
        sc.scenario.ue.position = {15.0 * std::sqrt(3.0), 15.0};
        sc.scenario.ue.velocity = {0.0, 10.0};
        sc.scenario.clock.clock_difference = 0.1e-6;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string w = where + ".scatterers[" + std::to_string(i) + "]";
            check_keys(list[i], w, {"range_m", "angle_deg", "doppler_hz"});
            if (!list[i].contains("range_m") || !list[i].contains("angle_deg"))
                throw ConfigError(w + ": range_m and angle_deg are required");
            Scatterer s;
            read(list[i], "range_m", w, s.range);
            s.angle = read_deg(list[i], "angle_deg", w, 0.0);
            sc.scenario.scatterers.push_back(s);
            std::optional<double> doppler;
            if (list[i].contains("doppler_hz")) {
                double v = 0.0;
                read(list[i], "doppler_hz", w, v);
                doppler = v;
            }
            sc.scenario.doppler_overrides.push_back(doppler);
        }
    }
    read(j, "name", where, sc.name);
    if (j.contains("ue")) {
        const Json &ue = j.at("ue");
        check_keys(ue, where + ".ue", {"position_m", "velocity_mps"});
        sc.scenario.ue.position = read_pair(ue, "position_m", where + ".ue", sc.scenario.ue.position);
        sc.scenario.ue.velocity = read_pair(ue, "velocity_mps", where + ".ue", sc.scenario.ue.velocity);
    }
    read(j, "clock_difference_s", where, sc.scenario.clock.clock_difference);
    if (j.contains("gain_policy")) {
        std::string g;
        read(j, "gain_policy", where, g);
        sc.gain_policy = parse_gain_policy(g, where + ".gain_policy");
    }
    return sc;
}

inline void apply_order(ModelOrderRule &o, const Json &j) {
    const std::string where = "algorithm.order";
    check_keys(j, where, {"kind", "ratio", "known_count", "max_dims", "snapshots", "dynamic_range"});
    if (j.contains("kind")) {
        std::string k;
        read(j, "kind", where, k);
        o.kind = parse_order_kind(k, where + ".kind");
    }
    read(j, "ratio", where, o.ratio);
    read(j, "known_count", where, o.known_count);
    read(j, "max_dims", where, o.max_dims);
    read(j, "snapshots", where, o.snapshots);
    read(j, "dynamic_range", where, o.dynamic_range);
}

inline void apply_grid(GridSpec &g, const Json &j) {
    const std::string where = "algorithm.grid";
    check_keys(j, where,
               {"min_range_m", "num_ranges", "angle_min_deg", "angle_max_deg", "angle_step_deg", "refine_levels",
                "refine_factor"});
    read(j, "min_range_m", where, g.min_range);
    read(j, "num_ranges", where, g.num_ranges);
    g.angle_min = read_deg(j, "angle_min_deg", where, g.angle_min);
    g.angle_max = read_deg(j, "angle_max_deg", where, g.angle_max);
    g.angle_step = read_deg(j, "angle_step_deg", where, g.angle_step);
    read(j, "refine_levels", where, g.refine_levels);
    read(j, "refine_factor", where, g.refine_factor);
}

inline void apply_algorithm(AlgorithmConfig &a, const Json &j) {
    const std::string where = "algorithm";
    check_keys(j, where,
               {"grid", "max_range_m", "threshold", "max_paths", "order", "refine_candidates",
                "periodogram_factor", "window", "interpolate"});
    if (j.contains("grid"))
        apply_grid(a.grid, j.at("grid"));
    if (j.contains("max_range_m")) {
        if (j.at("max_range_m").is_null()) {
            a.max_range.reset();
        } else {
            double r = 0.0;
            read(j, "max_range_m", where, r);
            a.max_range = r;
        }
    }
    read(j, "threshold", where, a.threshold);
    read(j, "max_paths", where, a.max_paths);
    if (j.contains("order"))
        apply_order(a.order, j.at("order"));
    read(j, "refine_candidates", where, a.refine_candidates);
    read(j, "periodogram_factor", where, a.periodogram_factor);
    if (j.contains("window")) {
        std::string w;
        read(j, "window", where, w);
        a.window = parse_window(w, where + ".window");
    }
    read(j, "interpolate", where, a.interpolate);
}

inline void apply_sweep(SweepConfig &s, const Json &j) {
    const std::string where = "sweep";
    check_keys(j, where, {"snr_db", "trials", "seed"});
    read(j, "snr_db", where, s.snr_db);
    read(j, "trials", where, s.trials);
    read(j, "seed", where, s.seed);
}

} // namespace detail

/// Applies every key of `j` on top of `config`. Unknown keys throw ConfigError; the
/// "profile" key is accepted but ignored here (see load_config).
inline void apply_json(ExperimentConfig &config, const Json &j) {
    detail::check_keys(j, "config",
                       {"profile", "waveform", "array", "scenarios", "algorithm", "sweep", "mode", "dump_spectrum"});
    if (j.contains("waveform"))
        detail::apply_waveform(config.waveform, j.at("waveform"));
    if (j.contains("array"))
        detail::apply_array(config.array, j.at("array"));
    if (j.contains("scenarios")) {
        const Json &list = j.at("scenarios");
        if (!list.is_array())
            throw ConfigError("'scenarios' must be an array");
        config.scenarios.clear();
        for (std::size_t i = 0; i < list.size(); ++i)
            config.scenarios.push_back(detail::parse_scenario(list[i], i));
    }
    if (j.contains("algorithm"))
        detail::apply_algorithm(config.algorithm, j.at("algorithm"));
    if (j.contains("sweep"))
        detail::apply_sweep(config.sweep, j.at("sweep"));
    if (j.contains("mode")) {
        std::string m;
        detail::read(j, "mode", "config", m);
        config.mode = detail::parse_enum<SynthesisMode>(m, "config.mode",
                                                        {{"fast", SynthesisMode::fast}, {"exact", SynthesisMode::exact}});
    }
    detail::read(j, "dump_spectrum", "config", config.dump_spectrum);
}

/// Profile defaults, then the keys of `j`. `profile` (when given) overrides the file's
/// "profile" entry; with neither, the desk profile is used.
inline ExperimentConfig load_config(const Json &j, const std::optional<std::string> &profile = std::nullopt) {
    std::string name = "desk";
    if (j.is_object())
        detail::read(j, "profile", "config", name);
    if (profile)
        name = *profile;
    ExperimentConfig config = make_profile(name);
    apply_json(config, j);
    return config;
}

inline Json parse_json_text(const std::string &text, const std::string &origin) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error &e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

inline ExperimentConfig load_config_file(const std::string &path,
                                         const std::optional<std::string> &profile = std::nullopt) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config(parse_json_text(ss.str(), path), profile);
}

/// Fully resolved configuration in the same schema load_config accepts.
inline Json to_json(const ExperimentConfig &c) {
    Json j;
    j["profile"] = c.profile;
    j["waveform"] = {{"num_subcarriers", c.waveform.num_subcarriers},
                     {"subcarrier_spacing_hz", c.waveform.subcarrier_spacing},
                     {"num_symbols", c.waveform.num_symbols},
                     {"cp_samples", c.waveform.cp_samples},
                     {"transmit_power", c.waveform.transmit_power},
                     {"modulation", to_string(c.waveform.modulation)}};
    j["array"] = {{"num_elements", c.array.num_elements},
                  {"spacing_m", c.array.spacing},
                  {"carrier_frequency_hz", c.array.carrier_frequency}};
    Json scenarios = Json::array();
    for (const auto &sc : c.scenarios) {
        Json list = Json::array();
        for (std::size_t i = 0; i < sc.scenario.scatterers.size(); ++i) {
            const Scatterer &s = sc.scenario.scatterers[i];
            Json e = {{"range_m", s.range}, {"angle_deg", rad_to_deg(s.angle)}};
            if (i < sc.scenario.doppler_overrides.size() && sc.scenario.doppler_overrides[i])
                e["doppler_hz"] = *sc.scenario.doppler_overrides[i];
            list.push_back(e);
        }
        const UeState &ue = sc.scenario.ue;
        scenarios.push_back({{"name", sc.name},
                             {"scatterers", list},
                             {"ue",
                              {{"position_m", {ue.position.x, ue.position.y}},
                               {"velocity_mps", {ue.velocity.x, ue.velocity.y}}}},
                             {"clock_difference_s", sc.scenario.clock.clock_difference},
                             {"gain_policy", detail::to_string(sc.gain_policy)}});
    }
    j["scenarios"] = scenarios;
    const AlgorithmConfig &a = c.algorithm;
    j["algorithm"] = {{"grid",
                       {{"min_range_m", a.grid.min_range},
                        {"num_ranges", a.grid.num_ranges},
                        {"angle_min_deg", rad_to_deg(a.grid.angle_min)},
                        {"angle_max_deg", rad_to_deg(a.grid.angle_max)},
                        {"angle_step_deg", rad_to_deg(a.grid.angle_step)},
                        {"refine_levels", a.grid.refine_levels},
                        {"refine_factor", a.grid.refine_factor}}},
                      {"max_range_m", a.max_range ? Json(*a.max_range) : Json(nullptr)},
                      {"threshold", a.threshold},
                      {"max_paths", a.max_paths},
                      {"order",
                       {{"kind", to_string(a.order.kind)},
                        {"ratio", a.order.ratio},
                        {"known_count", a.order.known_count},
                        {"max_dims", a.order.max_dims},
                        {"snapshots", a.order.snapshots},
                        {"dynamic_range", a.order.dynamic_range}}},
                      {"refine_candidates", a.refine_candidates},
                      {"periodogram_factor", a.periodogram_factor},
                      {"window", to_string(a.window)},
                      {"interpolate", a.interpolate}};
    j["sweep"] = {{"snr_db", c.sweep.snr_db}, {"trials", c.sweep.trials}, {"seed", c.sweep.seed}};
    j["mode"] = c.mode == SynthesisMode::fast ? "fast" : "exact";
    j["dump_spectrum"] = c.dump_spectrum;
    return j;
}

} // namespace nfloc

#endif
