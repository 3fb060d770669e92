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

#include "qleak/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "qleak/baselines.hpp"
#include "qleak/error.hpp"
#include "qleak/qnn.hpp"
#include "qleak/rng.hpp"

namespace qleak {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kQnnPrefix = "QNN-";

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open " + path.string() + " for writing", ErrorCode::Io);
    out << text;
    require(static_cast<bool>(out), "failed writing " + path.string(), ErrorCode::Io);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path.string(), ErrorCode::Io);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool is_qnn_cell(const std::string& cell) { return cell.rfind(kQnnPrefix, 0) == 0; }

QnnCellSpec parse_qnn_cell(const std::string& cell) {
    const std::string rest = cell.substr(std::string(kQnnPrefix).size());
    const auto dash = rest.find('-');
    require(dash != std::string::npos, "malformed QNN cell id '" + cell + "'");
    return {parse_ansatz_kind(rest.substr(0, dash)), parse_method(rest.substr(dash + 1))};
}

std::string qnn_cell_id(const QnnCellSpec& c) {
    return std::string(kQnnPrefix) + to_string(c.ansatz) + "-" + to_string(c.optimizer);
}

json report_to_json(const EvaluationReport& r) {
    return json{{"threshold", r.threshold}, {"auc", r.auc},         {"accuracy", r.accuracy},
                {"sensitivity", r.sensitivity}, {"specificity", r.specificity}, {"f1", r.f1},
                {"npv", r.npv},             {"brier", r.brier},     {"log_loss", r.log_loss},
                {"efron_r2", r.efron_r2},   {"auc_ci_lo", r.auc_ci.lo}, {"auc_ci_hi", r.auc_ci.hi},
                {"n_test", r.n},            {"n_test_positive", r.n_positive}};
}

EvaluationReport report_from_json(const json& j) {
    EvaluationReport r;
    r.threshold = j.at("threshold").get<double>();
    r.auc = j.at("auc").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.sensitivity = j.at("sensitivity").get<double>();
    r.specificity = j.at("specificity").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.npv = j.at("npv").get<double>();
    r.brier = j.at("brier").get<double>();
    r.log_loss = j.at("log_loss").get<double>();
    r.efron_r2 = j.at("efron_r2").get<double>();
    r.auc_ci.lo = j.at("auc_ci_lo").get<double>();
    r.auc_ci.hi = j.at("auc_ci_hi").get<double>();
    r.n = j.at("n_test").get<size_t>();
    r.n_positive = j.at("n_test_positive").get<size_t>();
    return r;
}

json noise_to_json(const NoiseConfig& n) {
    json j{{"p_gate", n.p_gate}, {"noisy_cx", n.noisy_cx}};
    if (n.shots) {
        j["shots"] = *n.shots;
    } else {
        j["shots"] = "exact";
    }
    return j;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    require(j.is_object(), where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        require(allowed.count(key) > 0, "unknown key '" + key + "' in " + where);
    }
}

std::vector<TracePoint> read_trace_csv(const fs::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open " + path.string(), ErrorCode::Io);
    std::string line;
    std::getline(in, line);
    std::vector<TracePoint> trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TracePoint t;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        require(c1 != std::string::npos && c2 != std::string::npos, "malformed trace line in " + path.string(),
                ErrorCode::Io);
        t.index = std::stoull(line.substr(0, c1));
        t.loss = std::strtod(line.c_str() + c1 + 1, nullptr);
        t.best_so_far = std::strtod(line.c_str() + c2 + 1, nullptr);
        trace.push_back(t);
    }
    return trace;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig c;
    for (auto a : {AnsatzKind::RealAmplitudes, AnsatzKind::EfficientSU2}) {
        for (auto m : {Method::SPSA, Method::CMAES, Method::COBYLA, Method::BFGS}) {
            c.qnn_grid.push_back({a, m});
        }
    }
    c.classical = {"LR", "LDA", "GNB", "AdaBoost", "MLP"};
    return c;
}

void ExperimentConfig::validate() const {
    require(n_runs >= 1, "n_runs must be at least 1");
    require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
    require(!features.empty(), "at least one feature is required");
    require(features.size() >= 2 || qnn_grid.empty(), "QNN cells need at least two features");
    require(features.size() <= kMaxQubits, "too many features for the qubit cap", ErrorCode::OutOfRange);
    require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
    require(link_gain > 0.0 && std::isfinite(link_gain), "link_gain must be positive");
    require(std::isfinite(feature_scale), "feature_scale must be finite");
    require(coupling_weight > 0.0, "coupling_weight must be positive");
    require(n_boot >= 1, "n_boot must be at least 1");
    require(workers >= 1, "workers must be at least 1");
    require(!qnn_grid.empty() || !classical.empty(), "the model grid is empty");
    noise.validate();
    for (const auto& name : classical) parse_classical_kind(name);
    const auto ids = cell_ids();
    require(std::set<std::string>(ids.begin(), ids.end()).size() == ids.size(), "duplicate cells in the grid");
}

std::vector<std::string> ExperimentConfig::cell_ids() const {
    std::vector<std::string> ids;
    for (const auto& name : classical) ids.push_back(to_string(parse_classical_kind(name)));
    for (const auto& c : qnn_grid) ids.push_back(qnn_cell_id(c));
    return ids;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j,
               {"cohort", "features", "split", "qnn_grid", "classical", "feature_map", "ansatz", "noise", "link_gain",
                "feature_scale", "n_runs", "base_seed", "beta", "budget", "n_boot", "workers", "out",
                "inject_failure"},
               "config");
    auto c = ExperimentConfig::defaults();
    try {
        if (j.contains("cohort")) {
            const auto& k = j["cohort"];
            check_keys(k, {"seed", "path", "coupling_weight"}, "cohort");
            if (k.contains("seed")) c.cohort_seed = k["seed"].get<uint64_t>();
            if (k.contains("path") && !k["path"].is_null()) c.cohort_path = k["path"].get<std::string>();
            if (k.contains("coupling_weight")) c.coupling_weight = k["coupling_weight"].get<double>();
        }
        if (j.contains("features")) c.features = j["features"].get<std::vector<std::string>>();
        if (j.contains("split")) {
            const auto& s = j["split"];
            check_keys(s, {"test_fraction", "stratified", "seed", "per_run"}, "split");
            if (s.contains("test_fraction")) c.test_fraction = s["test_fraction"].get<double>();
            if (s.contains("stratified")) c.stratified = s["stratified"].get<bool>();
            if (s.contains("seed")) c.split_seed = s["seed"].get<uint64_t>();
            if (s.contains("per_run")) c.split_per_run = s["per_run"].get<bool>();
        }
        if (j.contains("qnn_grid")) {
            c.qnn_grid.clear();
            for (const auto& cell : j["qnn_grid"]) {
                check_keys(cell, {"ansatz", "optimizer"}, "qnn_grid entry");
                c.qnn_grid.push_back({parse_ansatz_kind(cell.at("ansatz").get<std::string>()),
                                      parse_method(cell.at("optimizer").get<std::string>())});
            }
        }
        if (j.contains("classical")) c.classical = j["classical"].get<std::vector<std::string>>();
        if (j.contains("feature_map")) {
            const auto& f = j["feature_map"];
            check_keys(f, {"reps", "entanglement"}, "feature_map");
            if (f.contains("reps")) c.feature_map_reps = f["reps"].get<unsigned>();
            if (f.contains("entanglement")) c.feature_map_entanglement = parse_entanglement(f["entanglement"]);
        }
        if (j.contains("ansatz")) {
            const auto& a = j["ansatz"];
            check_keys(a, {"reps", "entanglement"}, "ansatz");
            if (a.contains("reps")) c.ansatz_reps = a["reps"].get<unsigned>();
            if (a.contains("entanglement")) c.ansatz_entanglement = parse_entanglement(a["entanglement"]);
        }
        if (j.contains("noise")) {
            const auto& n = j["noise"];
            check_keys(n, {"p_gate", "shots", "noisy_cx"}, "noise");
            if (n.contains("p_gate")) c.noise.p_gate = n["p_gate"].get<double>();
            if (n.contains("noisy_cx")) c.noise.noisy_cx = n["noisy_cx"].get<bool>();
            if (n.contains("shots")) {
                if (n["shots"].is_string()) {
                    require(n["shots"].get<std::string>() == "exact", "noise.shots must be a count or \"exact\"");
                    c.noise.shots.reset();
                } else {
                    const auto shots = n["shots"].get<int64_t>();
                    require(shots > 0, "noise.shots must be positive");
                    c.noise.shots = static_cast<uint64_t>(shots);
                }
            }
        }
        if (j.contains("link_gain")) c.link_gain = j["link_gain"].get<double>();
        if (j.contains("feature_scale")) c.feature_scale = j["feature_scale"].get<double>();
        if (j.contains("n_runs")) c.n_runs = j["n_runs"].get<size_t>();
        if (j.contains("base_seed")) c.base_seed = j["base_seed"].get<uint64_t>();
        if (j.contains("beta")) c.beta = j["beta"].get<double>();
        if (j.contains("budget")) c.budget = j["budget"].get<size_t>();
        if (j.contains("n_boot")) c.n_boot = j["n_boot"].get<size_t>();
        if (j.contains("workers")) c.workers = j["workers"].get<size_t>();
        if (j.contains("out")) c.out = j["out"].get<std::string>();
        if (j.contains("inject_failure")) c.inject_failure = j["inject_failure"].get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("bad config value: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_text(path)); }

namespace {

json config_json(const ExperimentConfig& c) {
    json grid = json::array();
    for (const auto& cell : c.qnn_grid) {
        grid.push_back({{"ansatz", to_string(cell.ansatz)}, {"optimizer", to_string(cell.optimizer)}});
    }
    json cohort{{"seed", c.cohort_seed}, {"coupling_weight", c.coupling_weight}};
    cohort["path"] = c.cohort_path ? json(*c.cohort_path) : json(nullptr);
    return json{
        {"cohort", cohort},
        {"features", c.features},
        {"split",
         {{"test_fraction", c.test_fraction},
          {"stratified", c.stratified},
          {"seed", c.split_seed},
          {"per_run", c.split_per_run}}},
        {"qnn_grid", grid},
        {"classical", c.classical},
        {"feature_map", {{"reps", c.feature_map_reps}, {"entanglement", to_string(c.feature_map_entanglement)}}},
        {"ansatz", {{"reps", c.ansatz_reps}, {"entanglement", to_string(c.ansatz_entanglement)}}},
        {"noise", noise_to_json(c.noise)},
        {"link_gain", c.link_gain},
        {"feature_scale", c.feature_scale},
        {"n_runs", c.n_runs},
        {"base_seed", c.base_seed},
        {"beta", c.beta},
        {"budget", c.budget},
        {"n_boot", c.n_boot},
        {"workers", c.workers},
        {"out", c.out},
        {"inject_failure", c.inject_failure},
    };
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& config) {
    auto j = config_json(config);
    j.erase("out");
    j.erase("workers");
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SplitIndices split_dataset(const std::vector<int>& labels, double test_fraction, bool stratified, uint64_t seed) {
    require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
    std::array<std::vector<size_t>, 2> by_class;
    for (size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] == 0 || labels[i] == 1, "labels must be 0 or 1");
        by_class[static_cast<size_t>(labels[i])].push_back(i);
    }
    require(by_class[0].size() >= 2 && by_class[1].size() >= 2, "each class needs at least 2 rows to split",
            ErrorCode::Infeasible);
    Rng rng(seed);
    SplitIndices out;
    auto take = [&](std::vector<size_t>& pool, size_t n_test) {
        rng.shuffle(pool);
        out.test.insert(out.test.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.train.insert(out.train.end(), pool.begin() + static_cast<std::ptrdiff_t>(n_test), pool.end());
    };
    if (stratified) {
        for (int cls : {1, 0}) {
            auto& pool = by_class[static_cast<size_t>(cls)];
            const double want = std::round(test_fraction * static_cast<double>(pool.size()));
            const size_t n_test = std::clamp<size_t>(static_cast<size_t>(want), 1, pool.size() - 1);
            take(pool, n_test);
        }
    } else {
        std::vector<size_t> all(labels.size());
        for (size_t i = 0; i < all.size(); ++i) all[i] = i;
        const double want = std::round(test_fraction * static_cast<double>(all.size()));
        take(all, std::clamp<size_t>(static_cast<size_t>(want), 1, all.size() - 1));
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::string record_to_json(const RunRecord& r) {
    json j{{"cell", r.cell},
           {"seed", r.seed},
           {"status", r.ok ? "ok" : "failed"},
           {"wall_seconds", r.wall_seconds},
           {"config_hash", r.config_hash}};
    if (!r.ok) {
        j["error"] = r.error;
        return j.dump(2) + "\n";
    }
    j["report"] = report_to_json(r.report);
    j["test_probs"] = r.test_probs;
    j["test_labels"] = r.test_labels;
    j["hyperparameters"] = r.hyperparameters;
    if (is_qnn_cell(r.cell)) {
        j["initial_loss"] = r.initial_loss ? json(*r.initial_loss) : json(nullptr);
        j["final_loss"] = r.final_loss ? json(*r.final_loss) : json(nullptr);
        j["n_evals"] = r.n_evals;
        j["converged"] = r.converged;
        j["optimizer_message"] = r.optimizer_message;
        j["trace_file"] = std::to_string(r.seed) + "_trace.csv";
    }
    return j.dump(2) + "\n";
}

RunRecord record_from_json(const std::string& json_text) {
    RunRecord r;
    try {
        const auto j = json::parse(json_text);
        r.cell = j.at("cell").get<std::string>();
        r.seed = j.at("seed").get<uint64_t>();
        r.ok = j.at("status").get<std::string>() == "ok";
        r.wall_seconds = j.at("wall_seconds").get<double>();
        r.config_hash = j.value("config_hash", "");
        if (!r.ok) {
            r.error = j.value("error", "");
            return r;
        }
        r.report = report_from_json(j.at("report"));
        r.test_probs = j.at("test_probs").get<std::vector<double>>();
        r.test_labels = j.at("test_labels").get<std::vector<int>>();
        r.hyperparameters = j.value("hyperparameters", "");
        if (j.contains("initial_loss") && !j["initial_loss"].is_null()) r.initial_loss = j["initial_loss"].get<double>();
        if (j.contains("final_loss") && !j["final_loss"].is_null()) r.final_loss = j["final_loss"].get<double>();
        r.n_evals = j.value("n_evals", size_t{0});
        r.converged = j.value("converged", false);
        r.optimizer_message = j.value("optimizer_message", "");
    } catch (const json::exception& e) {
        fail(ErrorCode::Io, std::string("malformed run record: ") + e.what());
    }
    return r;
}

CohortDataset load_cohort(const ExperimentConfig& config) {
    if (config.cohort_path) {
        return read_cohort_csv(*config.cohort_path);
    }
    auto spec = CohortSpec::published();
    spec.coupling_weight = config.coupling_weight;
    return generate_cohort(spec, config.cohort_seed);
}

RunRecord train_run(const ExperimentConfig& config, const CohortDataset& cohort, const std::string& cell,
                    uint64_t seed) {
    config.validate();
    const auto ids = config.cell_ids();
    require(std::find(ids.begin(), ids.end(), cell) != ids.end(), "cell '" + cell + "' is not in the grid");
    const bool poisoned =
        std::find(config.inject_failure.begin(), config.inject_failure.end(), cell) != config.inject_failure.end();
    const auto start = std::chrono::steady_clock::now();

    const uint64_t split_seed = config.split_per_run ? derive_seed(config.split_seed, seed) : config.split_seed;
    const auto split = split_dataset(cohort.leak, config.test_fraction, config.stratified, split_seed);
    const auto train_rows = cohort.subset(split.train);
    const auto test_rows = cohort.subset(split.test);

    RunRecord rec;
    rec.cell = cell;
    rec.seed = seed;
    rec.config_hash = config_hash(config);
    std::vector<double> train_probs;
    std::vector<int> train_labels;

    if (is_qnn_cell(cell)) {
        const auto spec = parse_qnn_cell(cell);
        const auto n = static_cast<unsigned>(config.features.size());
        const FeatureMapSpec fm{n, config.feature_map_reps, config.feature_map_entanglement};
        const AnsatzSpec ansatz{spec.ansatz, n, config.ansatz_reps, config.ansatz_entanglement};
        const auto train = train_rows.to_labeled(config.features, config.feature_scale);
        const auto test = test_rows.to_labeled(config.features, config.feature_scale);
        const QnnEvaluator ev_train(fm, ansatz, config.noise, config.link_gain, train);
        const QnnEvaluator ev_test(fm, ansatz, config.noise, config.link_gain, test);

        const size_t m = ev_train.n_params();
        Rng init(derive_seed(seed, 1));
        std::vector<double> theta0(m);
        for (double& t : theta0) t = init.uniform(-std::numbers::pi, std::numbers::pi);

        const uint64_t shot_stream = derive_seed(seed, 3);
        uint64_t eval_counter = 0;
        Objective obj;
        obj.dim = m;
        obj.eval = [&](std::span<const double> theta) {
            if (poisoned) return std::numeric_limits<double>::quiet_NaN();
            return ev_train.loss(theta, derive_seed(shot_stream, eval_counter++));
        };
        if (config.noise.is_exact()) {
            obj.gradient = [&](std::span<const double> theta) { return ev_train.loss_gradient(theta); };
        }
        const auto res = minimize(obj, theta0, spec.optimizer, config.budget, derive_seed(seed, 2));

        rec.initial_loss = ev_train.loss_exact(theta0);
        rec.final_loss = ev_train.loss_exact(res.theta_best);
        rec.n_evals = res.n_evals;
        rec.converged = res.converged;
        rec.optimizer_message = res.message;
        rec.trace = res.trace;
        rec.hyperparameters = "feature_map_reps=" + std::to_string(config.feature_map_reps) +
                              ";ansatz_reps=" + std::to_string(config.ansatz_reps) + ";link_gain=" +
                              fmt6(config.link_gain) + ";params=" + std::to_string(m);
        train_probs = ev_train.probabilities(res.theta_best, derive_seed(seed, 4));
        train_labels = train.labels;
        rec.test_probs = ev_test.probabilities(res.theta_best, derive_seed(seed, 5));
        rec.test_labels = test.labels;
    } else {
        require(!poisoned, "injected failure for cell " + cell, ErrorCode::Numerical);
        const auto kind = parse_classical_kind(cell);
        const auto train = train_rows.to_labeled(config.features);
        const auto test = test_rows.to_labeled(config.features);
        const auto tuned = fit_tuned(kind, train, seed);
        rec.hyperparameters = tuned.hyperparameters;
        train_probs = predict_proba(tuned.model, train);
        train_labels = train.labels;
        rec.test_probs = predict_proba(tuned.model, test);
        rec.test_labels = test.labels;
    }

    const double threshold = optimize_threshold_fbeta({train_labels, train_probs}, config.beta);
    rec.report = evaluate({rec.test_labels, rec.test_probs}, threshold, config.n_boot, derive_seed(seed, 6));
    rec.ok = true;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

void write_record(const std::string& out_dir, const RunRecord& record) {
    const fs::path dir = fs::path(out_dir) / "runs" / record.cell;
    write_text(dir / (std::to_string(record.seed) + ".json"), record_to_json(record));
    if (record.ok && is_qnn_cell(record.cell)) {
        std::ostringstream trace;
        write_trace_csv(trace, record.trace);
        write_text(dir / (std::to_string(record.seed) + "_trace.csv"), trace.str());
    }
}

RunRecord read_record(const std::string& out_dir, const std::string& cell, uint64_t seed) {
    const fs::path dir = fs::path(out_dir) / "runs" / cell;
    auto rec = record_from_json(read_text(dir / (std::to_string(seed) + ".json")));
    require(rec.cell == cell && rec.seed == seed, "record " + (dir / std::to_string(seed)).string() + " is mislabeled",
            ErrorCode::Io);
    if (rec.ok && is_qnn_cell(cell)) {
        rec.trace = read_trace_csv(dir / (std::to_string(seed) + "_trace.csv"));
    }
    return rec;
}

std::string benchmark_csv_header() {
    return report_csv_header() + ",beta,n_runs,n_failed,mean_initial_loss,mean_final_loss";
}

BenchmarkSummary run_benchmark(const ExperimentConfig& config) {
    config.validate();
    const fs::path out(config.out);
    fs::create_directories(out);
    write_text(out / "config.json", config_to_json(config));
    const auto cohort = load_cohort(config);
    {
        std::ostringstream csv;
        write_cohort_csv(csv, cohort);
        write_text(out / "cohort.csv", csv.str());
    }

    struct Task {
        std::string cell;
        uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const auto& cell : config.cell_ids()) {
        for (size_t r = 0; r < config.n_runs; ++r) tasks.push_back({cell, config.base_seed + r});
    }

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < tasks.size(); i = next++) {
            RunRecord rec;
            try {
                rec = train_run(config, cohort, tasks[i].cell, tasks[i].seed);
            } catch (const std::exception& e) {
                rec = RunRecord{};
                rec.cell = tasks[i].cell;
                rec.seed = tasks[i].seed;
                rec.config_hash = config_hash(config);
                rec.error = e.what();
            }
            try {
                write_record(config.out, rec);
            } catch (const std::exception&) {
                // Surfaces as a missing record during aggregation.
            }
        }
    };
    const size_t n_threads = std::min(config.workers, std::max<size_t>(tasks.size(), 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return aggregate_reports(config);
}

BenchmarkSummary aggregate_reports(const ExperimentConfig& config) {
    config.validate();
    const fs::path out(config.out);
    BenchmarkSummary summary;

    struct CellRecords {
        std::string cell;
        std::vector<RunRecord> ok;
    };
    std::vector<CellRecords> cells;
    for (const auto& cell : config.cell_ids()) {
        CellRecords cr{cell, {}};
        CellSummary cs;
        cs.cell = cell;
        for (size_t r = 0; r < config.n_runs; ++r) {
            const uint64_t seed = config.base_seed + r;
            try {
                auto rec = read_record(config.out, cell, seed);
                if (rec.ok) {
                    cr.ok.push_back(std::move(rec));
                } else {
                    summary.failures.push_back(cell + "/" + std::to_string(seed) + ": " + rec.error);
                }
            } catch (const std::exception& e) {
                summary.failures.push_back(cell + "/" + std::to_string(seed) + ": " + e.what());
            }
        }
        cs.n_runs = cr.ok.size();
        cs.n_failed = config.n_runs - cr.ok.size();
        if (!cr.ok.empty()) {
            auto avg = [&](auto field) {
                std::vector<double> v;
                for (const auto& rec : cr.ok) v.push_back(field(rec.report));
                return mean_of(v);
            };
            auto& m = cs.mean;
            m.threshold = avg([](const EvaluationReport& r) { return r.threshold; });
            m.auc = avg([](const EvaluationReport& r) { return r.auc; });
            m.accuracy = avg([](const EvaluationReport& r) { return r.accuracy; });
            m.sensitivity = avg([](const EvaluationReport& r) { return r.sensitivity; });
            m.specificity = avg([](const EvaluationReport& r) { return r.specificity; });
            m.f1 = avg([](const EvaluationReport& r) { return r.f1; });
            m.npv = avg([](const EvaluationReport& r) { return r.npv; });
            m.brier = avg([](const EvaluationReport& r) { return r.brier; });
            m.log_loss = avg([](const EvaluationReport& r) { return r.log_loss; });
            m.efron_r2 = avg([](const EvaluationReport& r) { return r.efron_r2; });
            m.auc_ci.lo = avg([](const EvaluationReport& r) { return r.auc_ci.lo; });
            m.auc_ci.hi = avg([](const EvaluationReport& r) { return r.auc_ci.hi; });
            m.n = cr.ok.front().report.n;
            m.n_positive = cr.ok.front().report.n_positive;
            if (is_qnn_cell(cell)) {
                std::vector<double> init, fin;
                for (const auto& rec : cr.ok) {
                    if (rec.initial_loss) init.push_back(*rec.initial_loss);
                    if (rec.final_loss) fin.push_back(*rec.final_loss);
                }
                if (!init.empty()) cs.mean_initial_loss = mean_of(init);
                if (!fin.empty()) cs.mean_final_loss = mean_of(fin);
            }
            cells.push_back(std::move(cr));
        }
        summary.cells.push_back(cs);
    }

    // report.csv / report.json
    std::string csv = benchmark_csv_header() + "\n";
    json rows = json::array();
    for (const auto& cs : summary.cells) {
        if (cs.n_runs == 0) continue;
        csv += report_csv_row(cs.cell, cs.mean) + "," + fmt6(config.beta) + "," + std::to_string(cs.n_runs) + "," +
               std::to_string(cs.n_failed) + "," + (cs.mean_initial_loss ? fmt6(*cs.mean_initial_loss) : "") + "," +
               (cs.mean_final_loss ? fmt6(*cs.mean_final_loss) : "") + "\n";
        json row = report_to_json(cs.mean);
        row["model"] = cs.cell;
        row["beta"] = config.beta;
        row["n_runs"] = cs.n_runs;
        row["n_failed"] = cs.n_failed;
        row["mean_initial_loss"] = cs.mean_initial_loss ? json(*cs.mean_initial_loss) : json(nullptr);
        row["mean_final_loss"] = cs.mean_final_loss ? json(*cs.mean_final_loss) : json(nullptr);
        rows.push_back(row);
    }
    write_text(out / "report.csv", csv);
    json report{{"config_hash", config_hash(config)},
                {"beta", config.beta},
                {"noise", noise_to_json(config.noise)},
                {"feature_map", {{"reps", config.feature_map_reps},
                                 {"entanglement", to_string(config.feature_map_entanglement)}}},
                {"ansatz", {{"reps", config.ansatz_reps}, {"entanglement", to_string(config.ansatz_entanglement)}}},
                {"link_gain", config.link_gain},
                {"feature_scale", config.feature_scale},
                {"models", rows},
                {"failures", summary.failures}};
    write_text(out / "report.json", report.dump(2) + "\n");

    // auc_ranking.csv: descending mean AUC, ties by name.
    std::vector<const CellSummary*> ranked;
    for (const auto& cs : summary.cells) {
        if (cs.n_runs > 0) ranked.push_back(&cs);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const CellSummary* a, const CellSummary* b) {
        if (a->mean.auc != b->mean.auc) return a->mean.auc > b->mean.auc;
        return a->cell < b->cell;
    });
    std::string ranking = "rank,model,auc,auc_ci_lo,auc_ci_hi\n";
    for (size_t i = 0; i < ranked.size(); ++i) {
        ranking += std::to_string(i + 1) + "," + ranked[i]->cell + "," + fmt6(ranked[i]->mean.auc) + "," +
                   fmt6(ranked[i]->mean.auc_ci.lo) + "," + fmt6(ranked[i]->mean.auc_ci.hi) + "\n";
    }
    write_text(out / "auc_ranking.csv", ranking);

    // mcnemar.csv over the first successful run of each cell.
    std::vector<std::vector<int>> correct;
    for (const auto& cr : cells) {
        const auto& rec = cr.ok.front();
        std::vector<int> c(rec.test_probs.size());
        for (size_t i = 0; i < c.size(); ++i) {
            const int pred = rec.test_probs[i] >= rec.report.threshold ? 1 : 0;
            c[i] = pred == rec.test_labels[i] ? 1 : 0;
        }
        correct.push_back(std::move(c));
    }
    std::string mc = "model_a,model_b,n01,n10,statistic,p_value,test,significant\n";
    for (size_t a = 0; a < cells.size(); ++a) {
        for (size_t b = a + 1; b < cells.size(); ++b) {
            require(cells[a].ok.front().test_labels == cells[b].ok.front().test_labels,
                    "McNemar pairs must share a test set", ErrorCode::Io);
            const auto r = mcnemar(correct[a], correct[b]);
            mc += cells[a].cell + "," + cells[b].cell + "," + std::to_string(r.n01) + "," + std::to_string(r.n10) + "," +
                  fmt6(r.statistic) + "," + fmt6(r.p_value) + "," + (r.exact ? "exact" : "chi2") + "," +
                  (r.p_value < 0.05 ? "1" : "0") + "\n";
        }
    }
    write_text(out / "mcnemar.csv", mc);

    // convergence/<cell>.csv: mean best-so-far by evaluation index, runs that
    // stopped early carry their last value forward.
    for (const auto& cr : cells) {
        if (!is_qnn_cell(cr.cell)) continue;
        size_t length = 0;
        for (const auto& rec : cr.ok) length = std::max(length, rec.trace.size());
        std::string conv = "evaluation_index,mean_best_so_far,n_runs\n";
        for (size_t k = 0; k < length; ++k) {
            double sum = 0.0;
            size_t index = k;
            for (const auto& rec : cr.ok) {
                if (rec.trace.empty()) continue;
                const auto& tp = rec.trace[std::min(k, rec.trace.size() - 1)];
                if (k < rec.trace.size()) index = tp.index;
                sum += tp.best_so_far;
            }
            conv += std::to_string(index) + "," + fmt17(sum / static_cast<double>(cr.ok.size())) + "," +
                    std::to_string(cr.ok.size()) + "\n";
        }
        write_text(out / "convergence" / (cr.cell + ".csv"), conv);
    }
    return summary;
}

StatsReport emit_stats_report(const CohortDataset& data) {
    for (const auto& f : kCohortFeatures) data.feature_index(f);
    require(data.leak.size() == data.size(), "cohort label column is missing");

    json features = json::array();
    std::string text;
    char line[256];
    std::snprintf(line, sizeof line, "%-8s %9s %11s %6s %-10s %8s %8s %8s %8s  %s\n", "feature", "leak/exp",
                  "leak/unexp", "RR", "direction", "chi2", "p", "chi2_Y", "p_Y", "flags");
    text += line;
    for (const auto& f : kCohortFeatures) {
        const auto t = contingency(data, f);
        const auto plain = chi2_test(t, false);
        const auto yates = chi2_test(t, true);
        json row{{"feature", f},
                 {"a", t.a},
                 {"b", t.b},
                 {"c", t.c},
                 {"d", t.d},
                 {"chi2", plain.statistic},
                 {"p", plain.p_value},
                 {"chi2_yates", yates.statistic},
                 {"p_yates", yates.p_value},
                 {"degenerate", plain.degenerate}};
        std::string rr_text = "-";
        std::string dir_text = "undefined";
        try {
            const auto rr = relative_risk(t);
            row["rr"] = rr.ratio;
            row["protective"] = rr.protective;
            dir_text = rr.protective ? "protective" : "risk";
        } catch (const Error&) {
            row["rr"] = nullptr;
            row["protective"] = nullptr;
        }
        char rr_buf[16];
        if (row["rr"].is_number()) {
            std::snprintf(rr_buf, sizeof rr_buf, "%.2f", row["rr"].get<double>());
            rr_text = rr_buf;
        }
        const std::string ratio_exp = std::to_string(t.a) + "/" + std::to_string(t.a + t.b);
        const std::string ratio_unexp = std::to_string(t.c) + "/" + std::to_string(t.c + t.d);
        std::snprintf(line, sizeof line, "%-8s %9s %11s %6s %-10s %8.3f %8.4f %8.3f %8.4f  %s\n", f.c_str(),
                      ratio_exp.c_str(), ratio_unexp.c_str(), rr_text.c_str(), dir_text.c_str(), plain.statistic,
                      plain.p_value, yates.statistic, yates.p_value, plain.degenerate ? "degenerate" : "");
        text += line;
        features.push_back(row);
    }

    json aic;
    text += "\nAIC backward elimination (logistic, k includes the intercept)\n";
    try {
        const auto sel = aic_stepwise(data, kCohortFeatures);
        json steps = json::array();
        for (const auto& s : sel.steps) {
            steps.push_back({{"features", s.features}, {"aic", s.aic}, {"removed", s.removed}});
            std::string names;
            for (const auto& n : s.features) names += (names.empty() ? "" : ",") + n;
            std::snprintf(line, sizeof line, "  %-10s AIC %.4f  {%s}\n",
                          s.removed.empty() ? "start" : ("-" + s.removed).c_str(), s.aic, names.c_str());
            text += line;
        }
        aic = {{"steps", steps}, {"selected", sel.selected}};
        std::string names;
        for (const auto& n : sel.selected) names += (names.empty() ? "" : ",") + n;
        text += "  selected {" + names + "}\n";
    } catch (const Error& e) {
        aic = {{"error", e.what()}};
        text += std::string("  failed: ") + e.what() + "\n";
    }

    size_t n_leak = 0;
    for (int y : data.leak) n_leak += y != 0;
    json j{{"n", data.size()}, {"n_leak", n_leak}, {"features", features}, {"aic", aic}};
    if (data.seed) j["seed"] = *data.seed;
    return {"n = " + std::to_string(data.size()) + ", leaks = " + std::to_string(n_leak) + "\n" + text,
            j.dump(2) + "\n"};
}

}  // namespace qleak
