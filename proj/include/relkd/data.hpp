#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace relkd {

struct Instance {
    std::vector<double> features;
    int target_label = -1;
    int coarse_label = -1;
    bool is_labeled = false;
};

struct HierarchySpec {
    int kc = 4;                  // super-class count
    int children_per_super = 3;  // target classes per super-class
    int d_in = 32;
    // Calibrated so neither grain is trivial: super-classes overlap enough
    // that coarse structure must be discovered, and fine classes within a
    // super overlap enough that hierarchy knowledge pays off.
    double coarse_spread = 2.0;
    double fine_spread = 1.0;
    double noise_sigma = 1.0;
    int per_class = 100;

    int num_classes() const { return kc * children_per_super; }
    void validate() const;  // throws std::invalid_argument
};

struct SplitSpec {
    double novel_ratio = 0.5;
    double label_ratio = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    std::vector<Instance> instances;
    int d_in = 0;
    int num_classes = 0;
    int num_super = 0;
    std::vector<int> class_to_super;  // ground truth, evaluation only

    // Per-feature pooled standard deviation; scales augmentation noise.
    double feature_sigma = 0.0;

    std::vector<int> labeled_indices() const;
    std::vector<int> unlabeled_indices() const;

    /// Label as the trainer sees it: -1 for unlabeled instances.
    int visible_target(int i) const {
        return instances[i].is_labeled ? instances[i].target_label : -1;
    }
};

struct SplitInfo {
    std::vector<int> seen_classes;
    std::vector<int> novel_classes;
    int num_labeled = 0;
    int num_unlabeled = 0;
};

Dataset generate(const HierarchySpec& spec, std::uint64_t seed);

/// Marks is_labeled in place per the split spec; novel-class instances are
/// always unlabeled.
SplitInfo split(Dataset& dataset, const SplitSpec& spec);

/// Gaussian jitter scaled by strength * feature_sigma, plus coordinate
/// dropout of the signal with probability 0.1. strength == 0 is the identity.
std::vector<double> augment(const std::vector<double>& x, double strength,
                            double feature_sigma, std::uint64_t seed);

void save_csv(const Dataset& dataset, const std::string& path);
Dataset load_csv(const std::string& path);

double compute_feature_sigma(const std::vector<Instance>& instances, int d_in);

}  // namespace relkd
