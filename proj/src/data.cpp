#include "relkd/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace relkd {

void HierarchySpec::validate() const {
    if (kc < 1 || children_per_super < 1 || d_in < 1 || per_class < 1) {
        throw std::invalid_argument("HierarchySpec: counts must be positive");
    }
    if (!(coarse_spread > fine_spread && fine_spread > 0.0 &&
          noise_sigma >= 0.0)) {
        throw std::invalid_argument(
            "HierarchySpec: need coarse_spread > fine_spread > 0 and "
            "noise_sigma >= 0");
    }
}

void SplitSpec::validate() const {
    if (!(novel_ratio > 0.0 && novel_ratio < 1.0)) {
        throw std::invalid_argument("SplitSpec: novel_ratio must be in (0,1)");
    }
    if (!(label_ratio > 0.0 && label_ratio <= 1.0)) {
        throw std::invalid_argument("SplitSpec: label_ratio must be in (0,1]");
    }
}

std::vector<int> Dataset::labeled_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(instances.size()); ++i) {
        if (instances[i].is_labeled) {
            idx.push_back(i);
        }
    }
    return idx;
}

std::vector<int> Dataset::unlabeled_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(instances.size()); ++i) {
        if (!instances[i].is_labeled) {
            idx.push_back(i);
        }
    }
    return idx;
}

double compute_feature_sigma(const std::vector<Instance>& instances, int d_in) {
    if (instances.empty()) {
        return 0.0;
    }
    std::vector<double> mean(d_in, 0.0);
    for (const auto& inst : instances) {
        for (int j = 0; j < d_in; ++j) {
            mean[j] += inst.features[j];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(instances.size());
    }
    double var = 0.0;
    for (const auto& inst : instances) {
        for (int j = 0; j < d_in; ++j) {
            const double d = inst.features[j] - mean[j];
            var += d * d;
        }
    }
    var /= static_cast<double>(instances.size()) * d_in;
    return std::sqrt(var);
}

Dataset generate(const HierarchySpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int K = spec.num_classes();
    std::vector<std::vector<double>> class_centers(K);
    std::vector<int> class_to_super(K);

    for (int s = 0; s < spec.kc; ++s) {
        std::vector<double> super_center(spec.d_in);
        for (double& v : super_center) {
            v = spec.coarse_spread * gauss(rng);
        }
        for (int c = 0; c < spec.children_per_super; ++c) {
            const int cls = s * spec.children_per_super + c;
            class_to_super[cls] = s;
            class_centers[cls].resize(spec.d_in);
            for (int j = 0; j < spec.d_in; ++j) {
                class_centers[cls][j] = super_center[j] + spec.fine_spread * gauss(rng);
            }
        }
    }

    Dataset ds;
    ds.d_in = spec.d_in;
    ds.num_classes = K;
    ds.num_super = spec.kc;
    ds.class_to_super = class_to_super;
    ds.instances.reserve(static_cast<std::size_t>(K) * spec.per_class);
    for (int cls = 0; cls < K; ++cls) {
        for (int i = 0; i < spec.per_class; ++i) {
            Instance inst;
            inst.target_label = cls;
            inst.coarse_label = class_to_super[cls];
            inst.features.resize(spec.d_in);
            for (int j = 0; j < spec.d_in; ++j) {
                inst.features[j] =
                    class_centers[cls][j] + spec.noise_sigma * gauss(rng);
            }
            ds.instances.push_back(std::move(inst));
        }
    }
    ds.feature_sigma = compute_feature_sigma(ds.instances, ds.d_in);
    return ds;
}

SplitInfo split(Dataset& dataset, const SplitSpec& spec) {
    spec.validate();
    if (dataset.instances.empty()) {
        throw std::invalid_argument("split: empty dataset");
    }
    const int K = dataset.num_classes;
    const int num_seen =
        static_cast<int>(std::ceil(K * (1.0 - spec.novel_ratio)));
    if (num_seen < 1 || num_seen >= K) {
        throw std::invalid_argument("split: novel_ratio leaves no seen or no novel classes");
    }

    std::mt19937_64 rng(spec.seed);
    std::vector<int> classes(K);
    std::iota(classes.begin(), classes.end(), 0);
    std::shuffle(classes.begin(), classes.end(), rng);

    SplitInfo info;
    info.seen_classes.assign(classes.begin(), classes.begin() + num_seen);
    info.novel_classes.assign(classes.begin() + num_seen, classes.end());
    std::sort(info.seen_classes.begin(), info.seen_classes.end());
    std::sort(info.novel_classes.begin(), info.novel_classes.end());

    std::vector<bool> seen(K, false);
    for (int c : info.seen_classes) {
        seen[c] = true;
    }

    // Per seen class: label label_ratio of its instances, chosen at random.
    std::vector<std::vector<int>> by_class(K);
    for (int i = 0; i < static_cast<int>(dataset.instances.size()); ++i) {
        dataset.instances[i].is_labeled = false;
        by_class[dataset.instances[i].target_label].push_back(i);
    }
    for (int c : info.seen_classes) {
        auto& members = by_class[c];
        std::shuffle(members.begin(), members.end(), rng);
        const int n_label = static_cast<int>(
            std::lround(spec.label_ratio * static_cast<double>(members.size())));
        for (int i = 0; i < n_label; ++i) {
            dataset.instances[members[i]].is_labeled = true;
        }
    }

    for (const auto& inst : dataset.instances) {
        if (inst.is_labeled) {
            ++info.num_labeled;
        } else {
            ++info.num_unlabeled;
        }
    }
    if (info.num_labeled == 0) {
        throw std::invalid_argument("split: ratios produced zero labeled instances");
    }
    (void)seen;
    return info;
}

std::vector<double> augment(const std::vector<double>& x, double strength,
                            double feature_sigma, std::uint64_t seed) {
    if (strength < 0.0) {
        throw std::invalid_argument("augment: strength must be >= 0");
    }
    if (strength == 0.0) {
        return x;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double keep = unif(rng) < 0.1 ? 0.0 : 1.0;
        out[j] = keep * x[j] + strength * feature_sigma * gauss(rng);
    }
    return out;
}

void save_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("save_csv: cannot open " + path);
    }
    for (int j = 0; j < dataset.d_in; ++j) {
        f << "f" << j << ",";
    }
    f << "target,coarse,is_labeled\n";
    char buf[64];
    for (const auto& inst : dataset.instances) {
        for (int j = 0; j < dataset.d_in; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", inst.features[j]);
            f << buf << ",";
        }
        f << inst.target_label << "," << inst.coarse_label << ","
          << (inst.is_labeled ? 1 : 0) << "\n";
    }
    if (!f) {
        throw std::runtime_error("save_csv: write failed for " + path);
    }
}

Dataset load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw std::runtime_error("load_csv: cannot open " + path);
    }
    std::string line;
    if (!std::getline(f, line)) {
        throw std::runtime_error("load_csv: empty file " + path);
    }
    int d_in = 0;
    {
        std::stringstream ss(line);
        std::string col;
        std::vector<std::string> cols;
        while (std::getline(ss, col, ',')) {
            cols.push_back(col);
        }
        if (cols.size() < 4 || cols[cols.size() - 3] != "target" ||
            cols[cols.size() - 2] != "coarse" ||
            cols[cols.size() - 1] != "is_labeled") {
            throw std::runtime_error("load_csv: bad header in " + path);
        }
        d_in = static_cast<int>(cols.size()) - 3;
    }

    Dataset ds;
    ds.d_in = d_in;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        Instance inst;
        inst.features.resize(d_in);
        try {
            for (int j = 0; j < d_in; ++j) {
                if (!std::getline(ss, cell, ',')) {
                    throw std::runtime_error("missing feature");
                }
                inst.features[j] = std::stod(cell);
            }
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("missing target");
            inst.target_label = std::stoi(cell);
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("missing coarse");
            inst.coarse_label = std::stoi(cell);
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("missing is_labeled");
            inst.is_labeled = std::stoi(cell) != 0;
        } catch (const std::exception& e) {
            throw std::runtime_error("load_csv: parse error at line " +
                                     std::to_string(lineno) + ": " + e.what());
        }
        ds.instances.push_back(std::move(inst));
    }

    int max_target = -1, max_coarse = -1;
    for (const auto& inst : ds.instances) {
        max_target = std::max(max_target, inst.target_label);
        max_coarse = std::max(max_coarse, inst.coarse_label);
    }
    ds.num_classes = max_target + 1;
    ds.num_super = max_coarse + 1;
    ds.class_to_super.assign(ds.num_classes, -1);
    for (const auto& inst : ds.instances) {
        if (inst.target_label >= 0) {
            ds.class_to_super[inst.target_label] = inst.coarse_label;
        }
    }
    ds.feature_sigma = compute_feature_sigma(ds.instances, ds.d_in);
    return ds;
}

}  // namespace relkd
