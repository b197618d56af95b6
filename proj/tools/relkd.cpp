#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relkd/config.hpp"
#include "relkd/data.hpp"
#include "relkd/evaluate.hpp"
#include "relkd/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

relkd::ExperimentConfig load_cfg(const std::string& config_path,
                                 const std::vector<std::string>& overrides) {
    relkd::ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = relkd::load_config(config_path);
    }
    for (const auto& o : overrides) {
        relkd::apply_override(cfg, o);
    }
    cfg.validate();
    return cfg;
}

void copy_config_into(const relkd::ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    std::ofstream f(cfg.out_dir + "/config.ini");
    f << cfg.to_text();
}

std::vector<int> seen_classes_of(const relkd::Dataset& ds) {
    std::vector<bool> seen(ds.num_classes, false);
    for (const auto& inst : ds.instances) {
        if (inst.is_labeled) {
            seen[inst.target_label] = true;
        }
    }
    std::vector<int> out;
    for (int c = 0; c < ds.num_classes; ++c) {
        if (seen[c]) {
            out.push_back(c);
        }
    }
    return out;
}

json report_to_json(const relkd::EvalReport& r) {
    json j;
    j["acc_all"] = r.acc_all.value_or(-1.0);
    j["acc_seen"] = r.acc_seen.value_or(-1.0);
    j["acc_novel"] = r.acc_novel.value_or(-1.0);
    j["acc_coarse_mapped"] = r.acc_coarse_mapped.value_or(-1.0);
    j["permutation"] = r.permutation;
    j["confusion"] = r.confusion;
    return j;
}

struct RunResult {
    relkd::EvalReport report;
};

/// Generates the dataset from the config, trains, and evaluates on the
/// unlabeled pool.
RunResult run_once(relkd::ExperimentConfig cfg) {
    auto dataset = relkd::generate(cfg.data, cfg.seed);
    auto split_cfg = cfg.split;
    split_cfg.seed = cfg.seed;
    auto info = relkd::split(dataset, split_cfg);
    auto state = relkd::train(cfg, dataset, info);
    relkd::write_affinity_csv(state, cfg.out_dir + "/affinity.csv");
    RunResult res;
    res.report = relkd::evaluate_model(state, dataset, info.seen_classes);
    std::ofstream f(cfg.out_dir + "/eval.json");
    f << report_to_json(res.report).dump(2) << "\n";
    return res;
}

int cmd_gen_data(const relkd::ExperimentConfig& cfg, const std::string& out_path) {
    auto dataset = relkd::generate(cfg.data, cfg.seed);
    auto split_cfg = cfg.split;
    split_cfg.seed = cfg.seed;
    auto info = relkd::split(dataset, split_cfg);

    fs::create_directories(fs::path(out_path).parent_path().empty()
                               ? "."
                               : fs::path(out_path).parent_path().string());
    relkd::save_csv(dataset, out_path);

    json manifest;
    manifest["num_instances"] = dataset.instances.size();
    manifest["num_classes"] = dataset.num_classes;
    manifest["num_super"] = dataset.num_super;
    manifest["seen_classes"] = info.seen_classes;
    manifest["novel_classes"] = info.novel_classes;
    manifest["num_labeled"] = info.num_labeled;
    manifest["num_unlabeled"] = info.num_unlabeled;
    manifest["class_to_super"] = dataset.class_to_super;
    std::ofstream mf(out_path + ".manifest.json");
    mf << manifest.dump(2) << "\n";

    std::cout << "dataset: " << dataset.instances.size() << " instances, "
              << dataset.num_classes << " classes, " << dataset.num_super
              << " super-classes\n"
              << "labeled: " << info.num_labeled
              << "  unlabeled: " << info.num_unlabeled << "\n"
              << "seen classes: " << info.seen_classes.size()
              << "  novel classes: " << info.novel_classes.size() << "\n";
    return 0;
}

int cmd_train(const relkd::ExperimentConfig& cfg, const std::string& data_path) {
    copy_config_into(cfg);
    relkd::Dataset dataset;
    relkd::SplitInfo info;
    if (!data_path.empty()) {
        dataset = relkd::load_csv(data_path);
        info.seen_classes = seen_classes_of(dataset);
        for (int c = 0; c < dataset.num_classes; ++c) {
            if (std::find(info.seen_classes.begin(), info.seen_classes.end(), c) ==
                info.seen_classes.end()) {
                info.novel_classes.push_back(c);
            }
        }
    } else {
        dataset = relkd::generate(cfg.data, cfg.seed);
        auto split_cfg = cfg.split;
        split_cfg.seed = cfg.seed;
        info = relkd::split(dataset, split_cfg);
    }
    auto state = relkd::train(cfg, dataset, info);
    relkd::write_affinity_csv(state, cfg.out_dir + "/affinity.csv");
    const auto report = relkd::evaluate_model(state, dataset, info.seen_classes);
    std::ofstream f(cfg.out_dir + "/eval.json");
    f << report_to_json(report).dump(2) << "\n";
    std::cout << "acc_all=" << report.acc_all.value_or(-1.0)
              << " acc_seen=" << report.acc_seen.value_or(-1.0)
              << " acc_novel=" << report.acc_novel.value_or(-1.0)
              << " acc_coarse_mapped=" << report.acc_coarse_mapped.value_or(-1.0)
              << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& preds_path, const std::string& out_path) {
    auto dataset = relkd::load_csv(data_path);
    const auto indices = dataset.unlabeled_indices();
    std::vector<int> preds;
    if (!preds_path.empty()) {
        // External predictions: CSV of instance_id,pred over the unlabeled pool.
        std::map<int, int> by_id;
        std::ifstream f(preds_path);
        if (!f) {
            throw std::runtime_error("cannot open predictions " + preds_path);
        }
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty() || !std::isdigit(static_cast<unsigned char>(line[0]))) {
                continue;
            }
            std::stringstream ss(line);
            std::string a, b;
            std::getline(ss, a, ',');
            std::getline(ss, b, ',');
            by_id[std::stoi(a)] = std::stoi(b);
        }
        for (int idx : indices) {
            auto it = by_id.find(idx);
            if (it == by_id.end()) {
                throw std::runtime_error("missing prediction for instance " +
                                         std::to_string(idx));
            }
            preds.push_back(it->second);
        }
    } else {
        auto state = relkd::load_checkpoint(checkpoint_path);
        preds = relkd::predict(state, dataset, indices);
    }

    const auto seen = seen_classes_of(dataset);
    std::vector<bool> is_seen_class(dataset.num_classes, false);
    for (int c : seen) {
        is_seen_class[c] = true;
    }
    std::vector<int> truths(indices.size());
    std::vector<bool> seen_mask(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        truths[i] = dataset.instances[indices[i]].target_label;
        seen_mask[i] = is_seen_class[truths[i]];
    }
    auto report = relkd::clustering_acc(preds, truths, seen_mask, dataset.num_classes);
    report.acc_coarse_mapped = relkd::coarse_mapped_acc(
        preds, truths, report.permutation, dataset.class_to_super);

    const auto j = report_to_json(report);
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << j.dump(2) << "\n";
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

struct VariantSpec {
    std::string name;
    bool cgm;
    bool kdm;
};

int cmd_ablate(const relkd::ExperimentConfig& base, int num_seeds) {
    copy_config_into(base);
    const std::vector<VariantSpec> variants = {
        {"target_only", false, false},
        {"cgm", true, false},
        {"full", true, true},
    };
    json table = json::array();
    std::map<std::string, std::vector<double>> novel_by_variant;
    std::map<std::string, std::vector<double>> all_by_variant;

    for (const auto& v : variants) {
        for (int s = 0; s < num_seeds; ++s) {
            auto cfg = base;
            cfg.enable_cgm = v.cgm;
            cfg.enable_kdm = v.kdm;
            cfg.seed = base.seed + s;  // shared seed per variant => shared data
            cfg.out_dir = base.out_dir + "/" + v.name + "/seed" +
                          std::to_string(cfg.seed);
            const auto res = run_once(cfg);
            novel_by_variant[v.name].push_back(res.report.acc_novel.value_or(0.0));
            all_by_variant[v.name].push_back(res.report.acc_all.value_or(0.0));
        }
    }

    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    std::cout << "variant       acc_all   acc_novel\n";
    for (const auto& v : variants) {
        const double ma = mean(all_by_variant[v.name]);
        const double mn = mean(novel_by_variant[v.name]);
        std::cout << v.name << std::string(14 - v.name.size(), ' ') << ma
                  << "   " << mn << "\n";
        table.push_back({{"variant", v.name},
                         {"acc_all", ma},
                         {"acc_novel", mn},
                         {"seeds", num_seeds}});
    }
    const double delta_all =
        mean(all_by_variant["full"]) - mean(all_by_variant["target_only"]);
    const double delta_novel =
        mean(novel_by_variant["full"]) - mean(novel_by_variant["target_only"]);
    std::cout << "delta(full - target_only): acc_all " << delta_all
              << ", acc_novel " << delta_novel << "\n";

    json out = {{"table", table},
                {"delta_all", delta_all},
                {"delta_novel", delta_novel}};
    std::ofstream f(base.out_dir + "/ablation.json");
    f << out.dump(2) << "\n";
    return 0;
}

std::map<std::string, std::vector<std::string>> parse_grid(const std::string& spec) {
    std::map<std::string, std::vector<std::string>> grid;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ';')) {
        if (part.empty()) {
            continue;
        }
        const auto eq = part.find('=');
        if (eq == std::string::npos) {
            throw relkd::ConfigError("grid entry is not key=v1,v2,...: " + part);
        }
        const std::string key = part.substr(0, eq);
        std::stringstream vs(part.substr(eq + 1));
        std::string v;
        while (std::getline(vs, v, ',')) {
            grid[key].push_back(v);
        }
    }
    return grid;
}

int cmd_sweep(const relkd::ExperimentConfig& base, const std::string& grid_spec,
              int num_seeds) {
    copy_config_into(base);
    auto grid = parse_grid(grid_spec);

    // Cartesian product over grid axes.
    std::vector<std::map<std::string, std::string>> cells = {{}};
    for (const auto& [key, values] : grid) {
        std::vector<std::map<std::string, std::string>> next;
        for (const auto& cell : cells) {
            for (const auto& v : values) {
                auto c = cell;
                c[key] = v;
                next.push_back(std::move(c));
            }
        }
        cells = std::move(next);
    }

    std::ofstream csv(base.out_dir + "/sweep.csv");
    csv << "cell,params,seed,acc_all,acc_seen,acc_novel,status\n";
    int cell_id = 0;
    for (const auto& cell : cells) {
        std::string params;
        for (const auto& [k, v] : cell) {
            params += (params.empty() ? "" : " ") + k + "=" + v;
        }
        for (int s = 0; s < num_seeds; ++s) {
            auto cfg = base;
            for (const auto& [k, v] : cell) {
                relkd::apply_override(cfg, k + "=" + v);
            }
            cfg.seed = base.seed + s;
            cfg.out_dir = base.out_dir + "/cell" + std::to_string(cell_id) +
                          "/seed" + std::to_string(cfg.seed);
            try {
                cfg.validate();
                const auto res = run_once(cfg);
                csv << cell_id << ",\"" << params << "\"," << cfg.seed << ","
                    << res.report.acc_all.value_or(-1.0) << ","
                    << res.report.acc_seen.value_or(-1.0) << ","
                    << res.report.acc_novel.value_or(-1.0) << ",ok\n";
            } catch (const std::exception& e) {
                csv << cell_id << ",\"" << params << "\"," << cfg.seed
                    << ",,,,failed: " << e.what() << "\n";
            }
        }
        ++cell_id;
    }
    std::cout << cells.size() << " cells x " << num_seeds
              << " seeds -> " << base.out_dir << "/sweep.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relation-guided category discovery trainer"};
    app.require_subcommand(1);

    std::string config_path, out_override, data_path, grid_spec;
    std::string checkpoint_path, preds_path, eval_out;
    std::vector<std::string> overrides;
    long long seed_override = -1;
    int num_seeds = 1;

    app.add_option("--config", config_path, "Config file (key = value lines)");
    app.add_option("--out", out_override, "Output directory override");
    app.add_option("--seed", seed_override, "Root seed override");
    app.add_option("--seeds", num_seeds, "Number of seeds for multi-seed commands");
    app.add_option("--set", overrides, "Extra key=value config overrides");

    auto* gen = app.add_subcommand("gen-data", "Generate a dataset CSV and manifest");
    std::string gen_out = "dataset.csv";
    gen->add_option("--out-file", gen_out, "Dataset CSV path");

    auto* train = app.add_subcommand("train", "Train a model");
    train->add_option("--data", data_path, "Existing dataset CSV (else generated)");

    auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint or predictions");
    evalc->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON");
    evalc->add_option("--data", data_path, "Dataset CSV");
    evalc->add_option("--preds", preds_path, "External predictions CSV (instance_id,pred)");
    evalc->add_option("--report", eval_out, "Where to write the eval report JSON");

    auto* ablate = app.add_subcommand("ablate", "Run target_only / cgm / full variants");

    auto* sweep = app.add_subcommand("sweep", "Grid sweep over config keys");
    sweep->add_option("--grid", grid_spec,
                      "Grid spec, e.g. \"ramp.c_weight=0.25,0.5;model.kc=2,4,8\"");

    CLI11_PARSE(app, argc, argv);

    try {
        relkd::ExperimentConfig cfg;
        if (!gen->parsed() || !config_path.empty()) {
            cfg = load_cfg(config_path, overrides);
        } else {
            for (const auto& o : overrides) {
                relkd::apply_override(cfg, o);
            }
        }
        if (seed_override >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed_override);
        }
        if (!out_override.empty()) {
            cfg.out_dir = out_override;
        }
        cfg.validate();

        if (gen->parsed()) {
            return cmd_gen_data(cfg, gen_out);
        }
        if (train->parsed()) {
            return cmd_train(cfg, data_path);
        }
        if (evalc->parsed()) {
            if (data_path.empty() || (checkpoint_path.empty() && preds_path.empty())) {
                std::cerr << "eval requires --data and one of --checkpoint/--preds\n";
                return kExitConfigError;
            }
            return cmd_eval(checkpoint_path, data_path, preds_path, eval_out);
        }
        if (ablate->parsed()) {
            return cmd_ablate(cfg, num_seeds);
        }
        if (sweep->parsed()) {
            if (grid_spec.empty()) {
                std::cerr << "sweep requires --grid\n";
                return kExitConfigError;
            }
            return cmd_sweep(cfg, grid_spec, num_seeds);
        }
    } catch (const relkd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return 0;
}
