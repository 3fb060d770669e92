// Copyright 2026 The qleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Talks to the library only through qleak.h.
//
// Exit codes: 0 success, 1 some benchmark runs failed, 2 usage or library error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qleak/qleak.h"

namespace {

struct Owned {
    char* p = nullptr;
    ~Owned() { qleak_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

struct CommonOptions {
    std::string config;
    std::optional<uint64_t> seed;
    std::string out;
};

int report_error(const char* what, qleak_status s) {
    std::fprintf(stderr, "qleak: %s failed (status %d): %s\n", what, static_cast<int>(s), qleak_last_error());
    return 2;
}

void add_common(CLI::App* cmd, CommonOptions& o, const char* seed_help) {
    cmd->add_option("--config", o.config, "JSON experiment config (defaults when omitted)");
    cmd->add_option("--seed", o.seed, seed_help);
    cmd->add_option("--out", o.out, "Output directory (overrides the config)");
}

// Loads and validates the config; fills `out_dir` from the config when the
// flag was not given.
bool load(const CommonOptions& o, std::string& config_json, std::string& out_dir) {
    Owned json;
    const auto s = qleak_config_load(o.config.empty() ? nullptr : o.config.c_str(), &json.p);
    if (s != QLEAK_OK) {
        report_error("loading config", s);
        return false;
    }
    config_json = json.str();
    out_dir = o.out.empty() ? nlohmann::json::parse(config_json).at("out").get<std::string>() : o.out;
    return true;
}

bool write_file(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) {
        std::fprintf(stderr, "qleak: cannot write %s\n", path.string().c_str());
        return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variational quantum classifiers vs classical baselines on a synthetic surgical cohort"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(qleak_version()));

    CommonOptions gen, stats, train, bench, report;
    auto* gen_cmd = app.add_subcommand("generate-cohort", "Generate the cohort and write <out>/cohort.csv");
    add_common(gen_cmd, gen, "Cohort seed");

    auto* stats_cmd = app.add_subcommand("stats", "Relative risks, chi-square tests and AIC selection");
    add_common(stats_cmd, stats, "Cohort seed (ignored with --cohort)");
    std::string stats_csv;
    bool stats_json = false;
    stats_cmd->add_option("--cohort", stats_csv, "Read the cohort from this CSV instead");
    stats_cmd->add_flag("--json", stats_json, "Print JSON instead of the text table");

    auto* train_cmd = app.add_subcommand("train", "Train one grid cell for one seed");
    add_common(train_cmd, train, "Run seed (default: the config's base seed)");
    std::string cell;
    train_cmd->add_option("--model", cell, "Cell id, e.g. LR or QNN-RA-COBYLA")->required();

    auto* bench_cmd = app.add_subcommand("benchmark", "Run the full grid and write all reports");
    add_common(bench_cmd, bench, "Base seed for the runs");

    auto* report_cmd = app.add_subcommand("report", "Rebuild reports from persisted run records");
    add_common(report_cmd, report, "Base seed the runs were made with");

    CLI11_PARSE(app, argc, argv);

    std::string config_json, out_dir;

    if (*gen_cmd) {
        if (!load(gen, config_json, out_dir)) return 2;
        qleak_cohort* cohort = nullptr;
        const uint64_t* seed = gen.seed ? &*gen.seed : nullptr;
        auto s = qleak_cohort_from_config(config_json.c_str(), seed, &cohort);
        if (s != QLEAK_OK) return report_error("generate-cohort", s);
        std::filesystem::create_directories(out_dir);
        const std::string path = (std::filesystem::path(out_dir) / "cohort.csv").string();
        s = qleak_cohort_write_csv(cohort, path.c_str());
        qleak_cohort_free(cohort);
        if (s != QLEAK_OK) return report_error("writing cohort", s);
        std::printf("%s\n", path.c_str());
        return 0;
    }

    if (*stats_cmd) {
        if (!load(stats, config_json, out_dir)) return 2;
        qleak_cohort* cohort = nullptr;
        qleak_status s;
        if (!stats_csv.empty()) {
            s = qleak_cohort_read_csv(stats_csv.c_str(), &cohort);
        } else {
            s = qleak_cohort_from_config(config_json.c_str(), stats.seed ? &*stats.seed : nullptr, &cohort);
        }
        if (s != QLEAK_OK) return report_error("loading cohort", s);
        Owned text, json;
        s = qleak_cohort_stats(cohort, &text.p, &json.p);
        qleak_cohort_free(cohort);
        if (s != QLEAK_OK) return report_error("stats", s);
        std::fputs(stats_json ? json.p : text.p, stdout);
        if (!stats.out.empty()) {
            const std::filesystem::path dir(stats.out);
            if (!write_file(dir / "stats.txt", text.str()) || !write_file(dir / "stats.json", json.str())) return 2;
        }
        return 0;
    }

    if (*train_cmd) {
        if (!load(train, config_json, out_dir)) return 2;
        const uint64_t seed =
            train.seed ? *train.seed : nlohmann::json::parse(config_json).at("base_seed").get<uint64_t>();
        Owned record;
        const auto s = qleak_train(config_json.c_str(), cell.c_str(), seed, out_dir.c_str(), &record.p);
        if (s != QLEAK_OK) return report_error("train", s);
        std::fputs(record.p, stdout);
        return 0;
    }

    CommonOptions& o = *bench_cmd ? bench : report;
    if (!load(o, config_json, out_dir)) return 2;
    int all_ok = 0;
    Owned summary;
    const uint64_t* seed = o.seed ? &*o.seed : nullptr;
    const auto s = *bench_cmd ? qleak_benchmark_run(config_json.c_str(), out_dir.c_str(), seed, &all_ok, &summary.p)
                              : qleak_report(config_json.c_str(), out_dir.c_str(), seed, &all_ok, &summary.p);
    if (s != QLEAK_OK) return report_error(*bench_cmd ? "benchmark" : "report", s);
    std::fputs(summary.p, stdout);
    return all_ok ? 0 : 1;
}
