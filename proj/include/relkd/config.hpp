#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "relkd/data.hpp"
#include "relkd/schedule.hpp"

namespace relkd {

/// Thrown on invalid or unknown configuration; the CLI maps it to exit 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    int epochs = 200;
    int batch_size = 64;
    double labeled_fraction = 0.5;
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    bool cosine_lr = true;
    double aug_strength = 0.1;
    double lr_mul_target = 1.0;
    double lr_mul_coarse = 1.0;
    double lr_mul_distill = 1.0;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    HierarchySpec data;
    SplitSpec split;

    int hidden = 64;
    int embed = 16;
    int model_kc = 4;  // model's super-class count (may differ from data.kc)

    TrainConfig train;

    double tau_sup = 0.07;
    double tau_self = 0.5;
    double tau_proto = 1.0;  // classifier softmax temperature; 1.0 = raw cosine
    double lambda_bal = 0.35;
    bool eq2_literal = false;
    bool symmetric_t2c = false;

    std::size_t queue_capacity = 1024;

    RampSchedule ramp_c{30, 60, 0.5};
    RampSchedule ramp_t2c{60, 90, 0.5};

    bool enable_cgm = true;
    bool enable_kdm = true;

    std::string out_dir = "out";

    void validate() const;  // throws ConfigError

    /// Canonical key=value serialization (sorted keys).
    std::string to_text() const;

    /// Hex hash of the canonical serialization.
    std::string hash() const;
};

/// Parses flat key=value text ('#' comments). Unknown keys are rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Applies one "key=value" override to an existing config.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

}  // namespace relkd
