#include "relkd/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace relkd {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: bad boolean for " + key + ": " + v);
}

template <typename T>
T parse_num(const std::string& v, const std::string& key) {
    std::istringstream ss(v);
    T out;
    ss >> out;
    const bool bad = ss.fail();
    ss.clear();
    const auto pos = ss.tellg();
    const std::size_t consumed =
        pos == -1 ? v.size() : static_cast<std::size_t>(pos);
    if (bad || !trim(v.substr(consumed)).empty()) {
        throw ConfigError("config: bad value for " + key + ": " + v);
    }
    return out;
}

void set_key(ExperimentConfig& c, const std::string& key, const std::string& val) {
    if (key == "seed") c.seed = parse_num<std::uint64_t>(val, key);
    else if (key == "data.kc") c.data.kc = parse_num<int>(val, key);
    else if (key == "data.children_per_super") c.data.children_per_super = parse_num<int>(val, key);
    else if (key == "data.d_in") c.data.d_in = parse_num<int>(val, key);
    else if (key == "data.coarse_spread") c.data.coarse_spread = parse_num<double>(val, key);
    else if (key == "data.fine_spread") c.data.fine_spread = parse_num<double>(val, key);
    else if (key == "data.noise_sigma") c.data.noise_sigma = parse_num<double>(val, key);
    else if (key == "data.per_class") c.data.per_class = parse_num<int>(val, key);
    else if (key == "split.novel_ratio") c.split.novel_ratio = parse_num<double>(val, key);
    else if (key == "split.label_ratio") c.split.label_ratio = parse_num<double>(val, key);
    else if (key == "model.hidden") c.hidden = parse_num<int>(val, key);
    else if (key == "model.embed") c.embed = parse_num<int>(val, key);
    else if (key == "model.kc") c.model_kc = parse_num<int>(val, key);
    else if (key == "train.epochs") c.train.epochs = parse_num<int>(val, key);
    else if (key == "train.batch_size") c.train.batch_size = parse_num<int>(val, key);
    else if (key == "train.labeled_fraction") c.train.labeled_fraction = parse_num<double>(val, key);
    else if (key == "train.lr") c.train.lr = parse_num<double>(val, key);
    else if (key == "train.momentum") c.train.momentum = parse_num<double>(val, key);
    else if (key == "train.weight_decay") c.train.weight_decay = parse_num<double>(val, key);
    else if (key == "train.cosine_lr") c.train.cosine_lr = parse_bool(val, key);
    else if (key == "train.aug_strength") c.train.aug_strength = parse_num<double>(val, key);
    else if (key == "train.lr_mul_target") c.train.lr_mul_target = parse_num<double>(val, key);
    else if (key == "train.lr_mul_coarse") c.train.lr_mul_coarse = parse_num<double>(val, key);
    else if (key == "train.lr_mul_distill") c.train.lr_mul_distill = parse_num<double>(val, key);
    else if (key == "loss.tau_sup") c.tau_sup = parse_num<double>(val, key);
    else if (key == "loss.tau_self") c.tau_self = parse_num<double>(val, key);
    else if (key == "loss.tau_proto") c.tau_proto = parse_num<double>(val, key);
    else if (key == "loss.lambda_bal") c.lambda_bal = parse_num<double>(val, key);
    else if (key == "loss.eq2_literal") c.eq2_literal = parse_bool(val, key);
    else if (key == "loss.symmetric_t2c") c.symmetric_t2c = parse_bool(val, key);
    else if (key == "queue.capacity") c.queue_capacity = parse_num<std::size_t>(val, key);
    else if (key == "ramp.c_start") c.ramp_c.t_start = parse_num<int>(val, key);
    else if (key == "ramp.c_end") c.ramp_c.t_end = parse_num<int>(val, key);
    else if (key == "ramp.c_weight") c.ramp_c.lambda_final = parse_num<double>(val, key);
    else if (key == "ramp.t2c_start") c.ramp_t2c.t_start = parse_num<int>(val, key);
    else if (key == "ramp.t2c_end") c.ramp_t2c.t_end = parse_num<int>(val, key);
    else if (key == "ramp.t2c_weight") c.ramp_t2c.lambda_final = parse_num<double>(val, key);
    else if (key == "flags.enable_cgm") c.enable_cgm = parse_bool(val, key);
    else if (key == "flags.enable_kdm") c.enable_kdm = parse_bool(val, key);
    else if (key == "out_dir") c.out_dir = val;
    else throw ConfigError("config: unknown key: " + key);
}

std::string fmt_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    try {
        data.validate();
        split.validate();
        ramp_c.validate();
        ramp_t2c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (hidden < 1 || embed < 1 || model_kc < 2) {
        throw ConfigError("config: model dims invalid (model.kc must be >= 2)");
    }
    if (model_kc >= data.num_classes()) {
        throw ConfigError("config: model.kc must be smaller than the class count");
    }
    if (train.epochs < 1 || train.batch_size < 2 || train.lr <= 0.0) {
        throw ConfigError("config: need epochs >= 1, batch_size >= 2, lr > 0");
    }
    if (train.labeled_fraction < 0.0 || train.labeled_fraction > 1.0) {
        throw ConfigError("config: train.labeled_fraction must be in [0,1]");
    }
    if (tau_sup <= 0.0 || tau_self <= 0.0 || tau_proto <= 0.0) {
        throw ConfigError("config: temperatures must be positive");
    }
    if (lambda_bal < 0.0 || lambda_bal > 1.0) {
        throw ConfigError("config: loss.lambda_bal must be in [0,1]");
    }
    if (queue_capacity < 1) {
        throw ConfigError("config: queue.capacity must be >= 1");
    }
}

std::string ExperimentConfig::to_text() const {
    std::map<std::string, std::string> kv = {
        {"seed", std::to_string(seed)},
        {"data.kc", std::to_string(data.kc)},
        {"data.children_per_super", std::to_string(data.children_per_super)},
        {"data.d_in", std::to_string(data.d_in)},
        {"data.coarse_spread", fmt_double(data.coarse_spread)},
        {"data.fine_spread", fmt_double(data.fine_spread)},
        {"data.noise_sigma", fmt_double(data.noise_sigma)},
        {"data.per_class", std::to_string(data.per_class)},
        {"split.novel_ratio", fmt_double(split.novel_ratio)},
        {"split.label_ratio", fmt_double(split.label_ratio)},
        {"model.hidden", std::to_string(hidden)},
        {"model.embed", std::to_string(embed)},
        {"model.kc", std::to_string(model_kc)},
        {"train.epochs", std::to_string(train.epochs)},
        {"train.batch_size", std::to_string(train.batch_size)},
        {"train.labeled_fraction", fmt_double(train.labeled_fraction)},
        {"train.lr", fmt_double(train.lr)},
        {"train.momentum", fmt_double(train.momentum)},
        {"train.weight_decay", fmt_double(train.weight_decay)},
        {"train.cosine_lr", train.cosine_lr ? "true" : "false"},
        {"train.aug_strength", fmt_double(train.aug_strength)},
        {"train.lr_mul_target", fmt_double(train.lr_mul_target)},
        {"train.lr_mul_coarse", fmt_double(train.lr_mul_coarse)},
        {"train.lr_mul_distill", fmt_double(train.lr_mul_distill)},
        {"loss.tau_sup", fmt_double(tau_sup)},
        {"loss.tau_self", fmt_double(tau_self)},
        {"loss.tau_proto", fmt_double(tau_proto)},
        {"loss.lambda_bal", fmt_double(lambda_bal)},
        {"loss.eq2_literal", eq2_literal ? "true" : "false"},
        {"loss.symmetric_t2c", symmetric_t2c ? "true" : "false"},
        {"queue.capacity", std::to_string(queue_capacity)},
        {"ramp.c_start", std::to_string(ramp_c.t_start)},
        {"ramp.c_end", std::to_string(ramp_c.t_end)},
        {"ramp.c_weight", fmt_double(ramp_c.lambda_final)},
        {"ramp.t2c_start", std::to_string(ramp_t2c.t_start)},
        {"ramp.t2c_end", std::to_string(ramp_t2c.t_end)},
        {"ramp.t2c_weight", fmt_double(ramp_t2c.lambda_final)},
        {"flags.enable_cgm", enable_cgm ? "true" : "false"},
        {"flags.enable_kdm", enable_kdm ? "true" : "false"},
        {"out_dir", out_dir},
    };
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k + " = " + v + "\n";
    }
    return out;
}

std::string ExperimentConfig::hash() const {
    const std::size_t h = std::hash<std::string>{}(to_text());
    std::ostringstream ss;
    ss << std::hex << h;
    return ss.str();
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) {
            line = line.substr(0, hash_pos);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(lineno) +
                              " is not key = value");
        }
        set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw ConfigError("config: cannot open " + path);
    }
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override is not key=value: " + assignment);
    }
    set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

}  // namespace relkd
