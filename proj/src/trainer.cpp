#include "relkd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "relkd/losses.hpp"
#include "relkd/schedule.hpp"

namespace relkd {

namespace {

TensorPtr random_unit_rows(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto t = make_tensor(rows, cols, true);
    for (double& v : t->data) {
        v = gauss(rng);
    }
    for (int i = 0; i < rows; ++i) {
        double sq = 0.0;
        for (int j = 0; j < cols; ++j) {
            sq += t->at(i, j) * t->at(i, j);
        }
        const double norm = std::sqrt(sq);
        for (int j = 0; j < cols; ++j) {
            t->at(i, j) /= norm;
        }
    }
    return t;
}

void renormalize_rows(Tensor2& t) {
    for (int i = 0; i < t.rows; ++i) {
        double sq = 0.0;
        for (int j = 0; j < t.cols; ++j) {
            sq += t.at(i, j) * t.at(i, j);
        }
        const double norm = std::sqrt(sq);
        if (norm < kRowNormFloor) {
            throw std::runtime_error("renormalize_rows: prototype collapsed to zero");
        }
        for (int j = 0; j < t.cols; ++j) {
            t.at(i, j) /= norm;
        }
    }
}

double epoch_lr(const TrainConfig& cfg, int t) {
    if (!cfg.cosine_lr) {
        return cfg.lr;
    }
    const double frac = static_cast<double>(t - 1) / cfg.epochs;
    return cfg.lr * 0.5 * (1.0 + std::cos(frac * std::numbers::pi));
}

void apply_sgd(const TensorPtr& param, SgdSlot& slot, double lr,
               const TrainConfig& cfg) {
    if (param->grad.empty()) {
        return;  // never touched by the tape this step
    }
    sgd_update(*param, slot, lr, cfg.momentum, cfg.weight_decay);
}

// Greedy farthest-point pick of one embedding row per coarse prototype:
// start from row 0, then repeatedly take the row whose largest cosine to the
// already-chosen set is smallest. Lands each prototype inside a distinct
// embedding cluster instead of orthogonal to all of them.
void seed_coarse_prototypes(Tensor2& coarse, const Tensor2& z) {
    if (z.rows < coarse.rows) {
        return;  // batch too small to seed from; keep the random init
    }
    std::vector<int> chosen = {0};
    while (static_cast<int>(chosen.size()) < coarse.rows) {
        int best_row = -1;
        double best_score = 2.0;
        for (int i = 0; i < z.rows; ++i) {
            double max_cos = -2.0;
            for (int c : chosen) {
                if (c == i) {
                    max_cos = 2.0;
                    break;
                }
                double d = 0.0;
                for (int j = 0; j < z.cols; ++j) {
                    d += z.at(i, j) * z.at(c, j);
                }
                max_cos = std::max(max_cos, d);
            }
            if (max_cos < best_score) {
                best_score = max_cos;
                best_row = i;
            }
        }
        chosen.push_back(best_row);
    }
    for (int k = 0; k < coarse.rows; ++k) {
        for (int j = 0; j < coarse.cols; ++j) {
            coarse.at(k, j) = z.at(chosen[k], j);
        }
    }
}

nlohmann::json tensor_to_json(const TensorPtr& t) {
    return {{"rows", t->rows}, {"cols", t->cols}, {"data", t->data}};
}

TensorPtr tensor_from_json(const nlohmann::json& j, bool requires_grad) {
    return make_tensor(j.at("rows").get<int>(), j.at("cols").get<int>(),
                       j.at("data").get<std::vector<double>>(), requires_grad);
}

}  // namespace

ModelState init_state(const ExperimentConfig& cfg, int num_classes) {
    std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + 1);
    ModelState state;
    state.encoder = encoder_init(rng(), cfg.data.d_in, cfg.hidden, cfg.embed);
    state.target_proto = random_unit_rows(rng, num_classes, cfg.embed);
    state.coarse_proto = random_unit_rows(rng, cfg.model_kc, cfg.embed);
    state.rel_logits = make_tensor(cfg.model_kc, num_classes, true);
    state.queue = MemoryQueue(cfg.queue_capacity);
    return state;
}

void sgd_update(Tensor2& param, SgdSlot& slot, double lr, double momentum,
                double weight_decay) {
    if (slot.velocity.size() != param.data.size()) {
        slot.velocity.assign(param.data.size(), 0.0);
    }
    if (param.grad.size() != param.data.size()) {
        param.grad.assign(param.data.size(), 0.0);
    }
    for (std::size_t i = 0; i < param.data.size(); ++i) {
        slot.velocity[i] = momentum * slot.velocity[i] + param.grad[i] +
                           weight_decay * param.data[i];
        param.data[i] -= lr * slot.velocity[i];
    }
}

BatchSampler::BatchSampler(const Dataset& dataset, const TrainConfig& cfg,
                           std::uint64_t seed)
    : dataset_(dataset), cfg_(cfg), rng_(seed) {
    labeled_ = dataset.labeled_indices();
    unlabeled_ = dataset.unlabeled_indices();
    if (labeled_.empty() || unlabeled_.empty()) {
        throw std::invalid_argument("BatchSampler: both pools must be nonempty");
    }
    std::shuffle(labeled_.begin(), labeled_.end(), rng_);
    std::shuffle(unlabeled_.begin(), unlabeled_.end(), rng_);
}

int BatchSampler::draw_labeled() {
    if (labeled_pos_ >= labeled_.size()) {
        std::shuffle(labeled_.begin(), labeled_.end(), rng_);
        labeled_pos_ = 0;
    }
    return labeled_[labeled_pos_++];
}

int BatchSampler::draw_unlabeled() {
    if (unlabeled_pos_ >= unlabeled_.size()) {
        std::shuffle(unlabeled_.begin(), unlabeled_.end(), rng_);
        unlabeled_pos_ = 0;
    }
    return unlabeled_[unlabeled_pos_++];
}

Batch BatchSampler::next() {
    const int nl = static_cast<int>(
        std::floor(cfg_.labeled_fraction * cfg_.batch_size));
    const int nu = cfg_.batch_size - nl;

    Batch batch;
    batch.num_labeled = nl;
    for (int i = 0; i < nl; ++i) {
        const int idx = draw_labeled();
        batch.indices.push_back(idx);
        batch.labels.push_back(dataset_.instances[idx].target_label);
    }
    for (int i = 0; i < nu; ++i) {
        batch.indices.push_back(draw_unlabeled());
    }

    const int n = static_cast<int>(batch.indices.size());
    batch.x1 = make_tensor(n, dataset_.d_in);
    batch.x2 = make_tensor(n, dataset_.d_in);
    for (int i = 0; i < n; ++i) {
        const auto& feats = dataset_.instances[batch.indices[i]].features;
        const auto v1 = augment(feats, cfg_.aug_strength, dataset_.feature_sigma,
                                rng_());
        const auto v2 = augment(feats, cfg_.aug_strength, dataset_.feature_sigma,
                                rng_());
        for (int j = 0; j < dataset_.d_in; ++j) {
            batch.x1->at(i, j) = v1[j];
            batch.x2->at(i, j) = v2[j];
        }
    }
    return batch;
}

LossBreakdown train_step(ModelState& state, const Batch& batch, int t,
                         const ExperimentConfig& cfg) {
    GradTape tape;
    LossBreakdown out;
    const int nl = batch.num_labeled;

    auto z = encode(tape, state.encoder, batch.x1);
    auto z_aug = encode(tape, state.encoder, batch.x2);

    // Target-grained module
    auto p = prototype_probs(tape, z, state.target_proto, cfg.tau_proto);
    auto p_aug = prototype_probs(tape, z_aug, state.target_proto, cfg.tau_proto);
    auto q_aug = detach(p_aug);

    TensorPtr l_sup, l_cls_l;
    if (nl > 0) {
        auto z_l = tape.slice_rows(z, 0, nl);
        l_sup = supcon_loss(tape, z_l, batch.labels, cfg.tau_sup);
        l_cls_l = cls_loss_labeled(tape, tape.slice_rows(p, 0, nl), batch.labels);
    } else {
        l_sup = const_scalar(0.0);
        l_cls_l = const_scalar(0.0);
    }
    auto l_self = selfcon_loss(tape, z, z_aug, cfg.tau_self, cfg.eq2_literal);
    auto l_cls_all = cls_loss_all(tape, p, q_aug);
    auto l_target =
        tape.add(mix_labeled_all(tape, l_cls_l, l_cls_all, cfg.lambda_bal),
                 mix_labeled_all(tape, l_sup, l_self, cfg.lambda_bal));

    out.sup_rep = l_sup->item();
    out.self_rep = l_self->item();
    out.cls_labeled = l_cls_l->item();
    out.cls_all = l_cls_all->item();
    out.l_target = l_target->item();

    out.f_c = cfg.enable_cgm ? ramp_weight(cfg.ramp_c, t) : 0.0;
    out.f_t2c = (cfg.enable_cgm && cfg.enable_kdm)
                    ? ramp_weight(cfg.ramp_t2c, t)
                    : 0.0;

    auto total = l_target;
    TensorPtr p_coarse;
    std::vector<std::vector<double>> coarse_rows_labeled;

    if (out.f_c > 0.0) {
        if (!state.coarse_seeded) {
            seed_coarse_prototypes(*state.coarse_proto, *z);
            state.coarse_seeded = true;
        }
        p_coarse = prototype_probs(tape, z, state.coarse_proto, cfg.tau_proto);
        auto q_coarse_aug =
            detach(prototype_probs(tape, z_aug, state.coarse_proto, cfg.tau_proto));

        TensorPtr l_c_cls_l, l_c_rep_l;
        if (nl > 0) {
            // Pseudo-super-labels come from the pre-push queue; an empty
            // per-class slot falls back to the instance's own prediction.
            auto pmq = make_tensor(nl, cfg.model_kc);
            std::vector<double> mean_row;
            for (int i = 0; i < nl; ++i) {
                if (state.queue.pseudo_super_label(batch.labels[i], mean_row)) {
                    for (int k = 0; k < cfg.model_kc; ++k) {
                        pmq->at(i, k) = mean_row[k];
                    }
                } else {
                    for (int k = 0; k < cfg.model_kc; ++k) {
                        pmq->at(i, k) = p_coarse->at(i, k);
                    }
                }
            }
            auto pc_l = tape.slice_rows(p_coarse, 0, nl);
            l_c_cls_l = coarse_cls_labeled(tape, pc_l, pmq);
            l_c_rep_l = coarse_rep_labeled(tape, tape.slice_rows(z, 0, nl),
                                           batch.labels);
            coarse_rows_labeled.resize(nl);
            for (int i = 0; i < nl; ++i) {
                coarse_rows_labeled[i].assign(
                    p_coarse->data.begin() + static_cast<std::size_t>(i) * cfg.model_kc,
                    p_coarse->data.begin() + static_cast<std::size_t>(i + 1) * cfg.model_kc);
            }
        } else {
            l_c_cls_l = const_scalar(0.0);
            l_c_rep_l = const_scalar(0.0);
        }
        auto l_c_cls_all = cls_loss_all(tape, p_coarse, q_coarse_aug);
        auto l_c_rep_all = coarse_rep_all(tape, z, state.coarse_proto);
        auto l_coarse = tape.add(
            mix_labeled_all(tape, l_c_cls_l, l_c_cls_all, cfg.lambda_bal),
            mix_labeled_all(tape, l_c_rep_l, l_c_rep_all, cfg.lambda_bal));

        out.c_cls_labeled = l_c_cls_l->item();
        out.c_cls_all = l_c_cls_all->item();
        out.c_rep_labeled = l_c_rep_l->item();
        out.c_rep_all = l_c_rep_all->item();
        out.l_coarse = l_coarse->item();
        total = tape.add(total, tape.scale(l_coarse, out.f_c));
    }

    if (out.f_t2c > 0.0) {
        if (!p_coarse) {
            p_coarse = prototype_probs(tape, z, state.coarse_proto, cfg.tau_proto);
        }
        auto c_t2c = inferred_prototypes(tape, state.rel_logits, state.target_proto);
        auto p_t2c = tape.softmax_rows(tape.matmul(z, tape.transpose(c_t2c)));
        auto teacher = cfg.symmetric_t2c ? p_coarse : detach(p_coarse);
        auto l_t2c = distill_loss(tape, teacher, p_t2c);
        out.t2c = l_t2c->item();
        out.l_t2c = out.t2c;
        total = tape.add(total, tape.scale(l_t2c, out.f_t2c));
    }

    out.total = total->item();
    if (!std::isfinite(out.total)) {
        throw std::runtime_error(
            "train_step: non-finite total loss at epoch " + std::to_string(t) +
            " (target=" + std::to_string(out.l_target) +
            ", coarse=" + std::to_string(out.l_coarse) +
            ", t2c=" + std::to_string(out.l_t2c) + ")");
    }

    tape.backward(total);

    const double lr = epoch_lr(cfg.train, t);
    apply_sgd(state.encoder.w1, state.vel_w1, lr * cfg.train.lr_mul_target, cfg.train);
    apply_sgd(state.encoder.b1, state.vel_b1, lr * cfg.train.lr_mul_target, cfg.train);
    apply_sgd(state.encoder.w2, state.vel_w2, lr * cfg.train.lr_mul_target, cfg.train);
    apply_sgd(state.encoder.b2, state.vel_b2, lr * cfg.train.lr_mul_target, cfg.train);
    apply_sgd(state.target_proto, state.vel_target, lr * cfg.train.lr_mul_target,
              cfg.train);
    renormalize_rows(*state.target_proto);
    if (out.f_c > 0.0) {
        apply_sgd(state.coarse_proto, state.vel_coarse,
                  lr * cfg.train.lr_mul_coarse, cfg.train);
        renormalize_rows(*state.coarse_proto);
        state.queue.push(batch.labels, coarse_rows_labeled);
    }
    if (out.f_t2c > 0.0) {
        apply_sgd(state.rel_logits, state.vel_rel, lr * cfg.train.lr_mul_distill,
                  cfg.train);
    }
    return out;
}

std::vector<int> predict(const ModelState& state, const Dataset& dataset,
                         const std::vector<int>& indices) {
    if (indices.empty()) {
        return {};
    }
    GradTape tape;
    auto x = make_tensor(static_cast<int>(indices.size()), dataset.d_in);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& feats = dataset.instances[indices[i]].features;
        for (int j = 0; j < dataset.d_in; ++j) {
            x->at(static_cast<int>(i), j) = feats[j];
        }
    }
    auto z = encode(tape, state.encoder, x);
    auto p = prototype_probs(tape, z, state.target_proto);
    std::vector<int> preds(indices.size());
    for (int i = 0; i < p->rows; ++i) {
        int best = 0;
        for (int k = 1; k < p->cols; ++k) {
            if (p->at(i, k) > p->at(i, best)) {
                best = k;
            }
        }
        preds[i] = best;
    }
    return preds;
}

EvalReport evaluate_model(const ModelState& state, const Dataset& dataset,
                          const std::vector<int>& seen_classes) {
    const auto indices = dataset.unlabeled_indices();
    const auto preds = predict(state, dataset, indices);
    std::vector<bool> is_seen_class(dataset.num_classes, false);
    for (int c : seen_classes) {
        is_seen_class[c] = true;
    }
    std::vector<int> truths(indices.size());
    std::vector<bool> seen_mask(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        truths[i] = dataset.instances[indices[i]].target_label;
        seen_mask[i] = is_seen_class[truths[i]];
    }
    auto report = clustering_acc(preds, truths, seen_mask, dataset.num_classes);
    report.acc_coarse_mapped = coarse_mapped_acc(
        preds, truths, report.permutation, dataset.class_to_super);
    return report;
}

ModelState train(const ExperimentConfig& cfg, const Dataset& dataset,
                 const SplitInfo& info, std::vector<EpochRecord>* history) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream metrics(cfg.out_dir + "/metrics.jsonl");
    if (!metrics) {
        throw std::runtime_error("train: cannot open metrics file in " +
                                 cfg.out_dir);
    }

    ModelState state = init_state(cfg, dataset.num_classes);
    BatchSampler sampler(dataset, cfg.train, cfg.seed * 0x2545f4914f6cdd1dULL + 7);

    const int steps_per_epoch = std::max<int>(
        1, static_cast<int>(dataset.instances.size()) / cfg.train.batch_size);

    for (int t = 1; t <= cfg.train.epochs; ++t) {
        LossBreakdown mean{};
        for (int s = 0; s < steps_per_epoch; ++s) {
            const auto batch = sampler.next();
            const auto step = train_step(state, batch, t, cfg);
            mean.l_target += step.l_target / steps_per_epoch;
            mean.l_coarse += step.l_coarse / steps_per_epoch;
            mean.l_t2c += step.l_t2c / steps_per_epoch;
            mean.total += step.total / steps_per_epoch;
            mean.f_c = step.f_c;
            mean.f_t2c = step.f_t2c;
        }
        state.epoch = t;

        const auto eval = evaluate_model(state, dataset, info.seen_classes);
        nlohmann::json rec = {
            {"epoch", t},
            {"L_target", mean.l_target},
            {"L_coarse", mean.l_coarse},
            {"L_t2c", mean.l_t2c},
            {"f_c", mean.f_c},
            {"f_t2c", mean.f_t2c},
            {"acc_all", eval.acc_all.value_or(-1.0)},
            {"acc_seen", eval.acc_seen.value_or(-1.0)},
            {"acc_novel", eval.acc_novel.value_or(-1.0)},
            {"acc_coarse_mapped", eval.acc_coarse_mapped.value_or(-1.0)},
        };
        metrics << rec.dump() << "\n";
        if (history != nullptr) {
            EpochRecord er;
            er.epoch = t;
            er.losses = mean;
            er.eval = eval;
            history->push_back(er);
        }
    }
    metrics.flush();
    save_checkpoint(state, cfg.hash(), cfg.out_dir + "/checkpoint.json");
    return state;
}

void save_checkpoint(const ModelState& state, const std::string& config_hash,
                     const std::string& path) {
    nlohmann::json j;
    j["version"] = 1;
    j["format"] = "relkd-checkpoint";
    j["epoch"] = state.epoch;
    j["coarse_seeded"] = state.coarse_seeded;
    j["config_hash"] = config_hash;
    j["encoder"] = {{"w1", tensor_to_json(state.encoder.w1)},
                    {"b1", tensor_to_json(state.encoder.b1)},
                    {"w2", tensor_to_json(state.encoder.w2)},
                    {"b2", tensor_to_json(state.encoder.b2)}};
    j["target_proto"] = tensor_to_json(state.target_proto);
    j["coarse_proto"] = tensor_to_json(state.coarse_proto);
    j["rel_logits"] = tensor_to_json(state.rel_logits);
    j["queue_capacity"] = state.queue.capacity();
    auto& qj = j["queue"] = nlohmann::json::array();
    for (const auto& [label, probs] : state.queue.entries()) {
        qj.push_back({{"label", label}, {"p", probs}});
    }
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("save_checkpoint: cannot open " + path);
    }
    f << j.dump();
}

ModelState load_checkpoint(const std::string& path, std::string* config_hash) {
    std::ifstream f(path);
    if (!f) {
        throw std::runtime_error("load_checkpoint: cannot open " + path);
    }
    nlohmann::json j;
    f >> j;
    if (j.value("format", "") != "relkd-checkpoint" || j.value("version", 0) != 1) {
        throw std::runtime_error("load_checkpoint: unrecognized header in " + path);
    }
    ModelState state;
    state.epoch = j.at("epoch").get<int>();
    state.coarse_seeded = j.value("coarse_seeded", false);
    if (config_hash != nullptr) {
        *config_hash = j.at("config_hash").get<std::string>();
    }
    state.encoder.w1 = tensor_from_json(j.at("encoder").at("w1"), true);
    state.encoder.b1 = tensor_from_json(j.at("encoder").at("b1"), true);
    state.encoder.w2 = tensor_from_json(j.at("encoder").at("w2"), true);
    state.encoder.b2 = tensor_from_json(j.at("encoder").at("b2"), true);
    state.target_proto = tensor_from_json(j.at("target_proto"), true);
    state.coarse_proto = tensor_from_json(j.at("coarse_proto"), true);
    state.rel_logits = tensor_from_json(j.at("rel_logits"), true);
    state.queue = MemoryQueue(j.at("queue_capacity").get<std::size_t>());
    std::deque<std::pair<int, std::vector<double>>> entries;
    for (const auto& e : j.at("queue")) {
        entries.emplace_back(e.at("label").get<int>(),
                             e.at("p").get<std::vector<double>>());
    }
    state.queue.restore(std::move(entries));
    return state;
}

void write_affinity_csv(const ModelState& state, const std::string& path) {
    GradTape tape;
    auto affinity = tape.softmax_rows(state.rel_logits);
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("write_affinity_csv: cannot open " + path);
    }
    for (int j = 0; j < affinity->cols; ++j) {
        f << (j ? "," : "") << "class" << j;
    }
    f << "\n";
    for (int i = 0; i < affinity->rows; ++i) {
        for (int j = 0; j < affinity->cols; ++j) {
            f << (j ? "," : "") << affinity->at(i, j);
        }
        f << "\n";
    }
}

}  // namespace relkd
