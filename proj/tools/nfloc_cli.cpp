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


// nfloc_cli: Monte Carlo sweeps from a JSON configuration.
//
//   nfloc_cli run --config <file> [--scenario close|far] [--snr-db <list>] [--trials <n>]
//                 [--seed <u64>] [--profile desk|paper] [--mode exact|fast] [--out <dir>]
//                 [--dump-spectrum]
//
// Writes <out>/results.csv, <out>/manifest.json and, with --dump-spectrum, the coarse
// spectrum of every iteration of trial 0 of each (scenario, SNR) point under <out>/spectra.

#include "nfloc/config_io.hpp"
#include "nfloc/nfloc.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef NFLOC_GIT_REVISION
#define NFLOC_GIT_REVISION "unknown"
#endif

namespace fs = std::filesystem;

namespace {

struct RunOptions {
    std::string config_path;
    std::optional<std::string> scenario;
    std::vector<double> snr_db;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> profile;
    std::optional<std::string> mode;
    std::string out_dir = "nfloc_out";
    bool dump_spectrum = false;
};

// Command-line overrides come last, after the profile defaults and the file.
nfloc::ExperimentConfig resolve(const RunOptions &opt) {
    nfloc::ExperimentConfig config = nfloc::load_config_file(opt.config_path, opt.profile);
    if (opt.scenario) {
        std::vector<nfloc::ScenarioConfig> kept;
        for (const auto &sc : config.scenarios)
            if (sc.name == *opt.scenario)
                kept.push_back(sc);
        if (kept.empty())
            kept.push_back(nfloc::preset_scenario(*opt.scenario));
        config.scenarios = kept;
    }
    if (!opt.snr_db.empty())
        config.sweep.snr_db = opt.snr_db;
    if (opt.trials)
        config.sweep.trials = *opt.trials;
    if (opt.seed)
        config.sweep.seed = *opt.seed;
    if (opt.mode)
        config.mode = *opt.mode == "exact" ? nfloc::SynthesisMode::exact : nfloc::SynthesisMode::fast;
    if (opt.dump_spectrum)
        config.dump_spectrum = true;
    config.validate();
    return config;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw nfloc::Error("cannot write '" + path.string() + "'");
    out << text;
}

int run(const RunOptions &opt) {
    const nfloc::ExperimentConfig config = resolve(opt);
    const fs::path out_dir(opt.out_dir);
    fs::create_directories(out_dir);
    if (config.dump_spectrum)
        fs::create_directories(out_dir / "spectra");

    const std::string started = utc_timestamp();
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t done = 0;
    const std::size_t total = config.scenarios.size() * config.sweep.snr_db.size() * config.sweep.trials;

    const auto observer = [&](const nfloc::TrialResult &r) {
        ++done;
        if (config.dump_spectrum && r.trial == 0) {
            char tag[96];
            std::snprintf(tag, sizeof(tag), "%s_snr%+.1f_trial%zu", r.scenario.c_str(), r.snr_db.value_or(0.0),
                          r.trial);
            for (std::size_t i = 0; i < r.spectra.size(); ++i)
                write_file(out_dir / "spectra" / (std::string(tag) + "_iter" + std::to_string(i + 1) + ".txt"),
                           nfloc::spectrum_text(r.spectra[i]));
        }
        std::fprintf(stderr, "[%zu/%zu] %s snr=%g trial=%zu %s\n", done, total, r.scenario.c_str(),
                     r.snr_db.value_or(0.0), r.trial, r.success() ? "ok" : r.failure.value_or("failed").c_str());
    };
    const std::vector<nfloc::SweepRow> rows = nfloc::run_sweep(config, observer);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string csv = nfloc::sweep_csv(rows);
    write_file(out_dir / "results.csv", csv);

    nfloc::Json manifest;
    manifest["version"] = nfloc::kVersion;
    manifest["git_revision"] = NFLOC_GIT_REVISION;
    manifest["config_file"] = opt.config_path;
    manifest["seed"] = config.sweep.seed;
    manifest["started_utc"] = started;
    manifest["wall_time_s"] = wall;
    manifest["config"] = nfloc::to_json(config);
    write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << csv;
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"nfloc: near-field scatterer sensing and NLoS UE localization"};
    app.require_subcommand(1);
    RunOptions opt;
    std::string scenario, profile, mode;
    std::size_t trials = 0;
    std::uint64_t seed = 0;

    CLI::App *cmd = app.add_subcommand("run", "run a Monte Carlo sweep");
    cmd->add_option("--config", opt.config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
    auto *o_scenario = cmd->add_option("--scenario", scenario, "restrict to one scenario (close|far or a config name)");
    cmd->add_option("--snr-db", opt.snr_db, "SNR points in dB, e.g. --snr-db 0,10,20")->delimiter(',');
    auto *o_trials = cmd->add_option("--trials", trials, "trials per (scenario, SNR) point")->check(CLI::PositiveNumber);
    auto *o_seed = cmd->add_option("--seed", seed, "master seed");
    auto *o_profile =
        cmd->add_option("--profile", profile, "parameter profile")->check(CLI::IsMember({"desk", "paper"}));
    auto *o_mode = cmd->add_option("--mode", mode, "synthesis mode")->check(CLI::IsMember({"exact", "fast"}));
    cmd->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    cmd->add_flag("--dump-spectrum", opt.dump_spectrum, "write per-iteration MUSIC spectra of trial 0");

    CLI11_PARSE(app, argc, argv);

    if (*o_scenario)
        opt.scenario = scenario;
    if (*o_trials)
        opt.trials = trials;
    if (*o_seed)
        opt.seed = seed;
    if (*o_profile)
        opt.profile = profile;
    if (*o_mode)
        opt.mode = mode;
    try {
        return run(opt);
    } catch (const nfloc::ConfigError &e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
