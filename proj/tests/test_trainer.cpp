#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "relkd/trainer.hpp"

using namespace relkd;

namespace {

ExperimentConfig small_config(const char* out_name) {
    ExperimentConfig cfg;
    cfg.seed = 3;
    cfg.data.kc = 2;
    cfg.data.children_per_super = 2;  // K = 4
    cfg.data.d_in = 8;
    cfg.data.per_class = 15;
    cfg.data.coarse_spread = 6.0;
    cfg.data.fine_spread = 1.5;
    cfg.data.noise_sigma = 0.5;
    cfg.model_kc = 2;
    cfg.hidden = 16;
    cfg.embed = 8;
    cfg.train.epochs = 6;
    cfg.train.batch_size = 8;
    cfg.ramp_c = {2, 4, 0.5};
    cfg.ramp_t2c = {3, 5, 0.5};
    cfg.out_dir =
        (std::filesystem::temp_directory_path() / out_name).string();
    return cfg;
}

bool same_bits(const TensorPtr& a, const TensorPtr& b) {
    return a->rows == b->rows && a->cols == b->cols && a->data == b->data;
}

}  // namespace

TEST_CASE("sgd hand examples") {
    // plain gradient step: 5 - 1*2 = 3
    Tensor2 p{1, 1, {5.0}, {2.0}, true};
    SgdSlot slot;
    sgd_update(p, slot, 1.0, 0.0, 0.0);
    CHECK(p.data[0] == doctest::Approx(3.0));

    // momentum unroll: v1=g, v2=mu*g+g
    Tensor2 q{1, 1, {0.0}, {1.0}, true};
    SgdSlot s2;
    sgd_update(q, s2, 0.1, 0.9, 0.0);
    CHECK(q.data[0] == doctest::Approx(-0.1));
    q.grad[0] = 1.0;
    sgd_update(q, s2, 0.1, 0.9, 0.0);
    CHECK(q.data[0] == doctest::Approx(-0.1 - 0.1 * 1.9));

    // pure weight decay shrinks toward zero
    Tensor2 r{1, 1, {2.0}, {0.0}, true};
    SgdSlot s3;
    sgd_update(r, s3, 0.5, 0.0, 0.1);
    CHECK(r.data[0] == doctest::Approx(2.0 - 0.5 * 0.2));
}

TEST_CASE("batches put labeled rows first and respect the labeled fraction") {
    auto cfg = small_config("relkd_t_batch");
    auto ds = generate(cfg.data, cfg.seed);
    split(ds, SplitSpec{0.5, 0.5, cfg.seed});
    BatchSampler sampler(ds, cfg.train, 11);

    for (int b = 0; b < 20; ++b) {
        auto batch = sampler.next();
        CHECK(batch.indices.size() == 8);
        CHECK(batch.num_labeled == 4);
        CHECK(batch.labels.size() == 4);
        for (int i = 0; i < batch.num_labeled; ++i) {
            CHECK(ds.instances[batch.indices[i]].is_labeled);
            CHECK(batch.labels[i] == ds.instances[batch.indices[i]].target_label);
        }
        for (std::size_t i = batch.num_labeled; i < batch.indices.size(); ++i) {
            CHECK_FALSE(ds.instances[batch.indices[i]].is_labeled);
        }
        CHECK(batch.x1->rows == 8);
        CHECK(batch.x2->rows == 8);
        CHECK(batch.x1->data != batch.x2->data);  // two distinct views
    }
}

TEST_CASE("one pass covers every labeled instance exactly once") {
    auto cfg = small_config("relkd_t_pass");
    auto ds = generate(cfg.data, cfg.seed);
    split(ds, SplitSpec{0.5, 0.5, cfg.seed});
    const auto labeled = ds.labeled_indices();
    const int per_batch = 4;
    REQUIRE(labeled.size() % per_batch == 0);

    BatchSampler sampler(ds, cfg.train, 13);
    std::map<int, int> seen_count;
    const int batches = static_cast<int>(labeled.size()) / per_batch;
    for (int b = 0; b < batches; ++b) {
        auto batch = sampler.next();
        for (int i = 0; i < batch.num_labeled; ++i) {
            ++seen_count[batch.indices[i]];
        }
    }
    CHECK(seen_count.size() == labeled.size());
    for (const auto& [idx, n] : seen_count) {
        CHECK(n == 1);
    }
}

TEST_CASE("training is bit-for-bit deterministic in the seed") {
    auto cfg_a = small_config("relkd_t_det_a");
    auto cfg_b = small_config("relkd_t_det_b");
    cfg_a.train.epochs = 3;
    cfg_b.train.epochs = 3;

    auto ds_a = generate(cfg_a.data, cfg_a.seed);
    auto info_a = split(ds_a, SplitSpec{0.5, 0.5, cfg_a.seed});
    auto ds_b = generate(cfg_b.data, cfg_b.seed);
    auto info_b = split(ds_b, SplitSpec{0.5, 0.5, cfg_b.seed});

    auto state_a = train(cfg_a, ds_a, info_a);
    auto state_b = train(cfg_b, ds_b, info_b);
    CHECK(same_bits(state_a.encoder.w1, state_b.encoder.w1));
    CHECK(same_bits(state_a.encoder.w2, state_b.encoder.w2));
    CHECK(same_bits(state_a.target_proto, state_b.target_proto));
    CHECK(same_bits(state_a.coarse_proto, state_b.coarse_proto));
    CHECK(same_bits(state_a.rel_logits, state_b.rel_logits));

    // a different seed diverges
    auto cfg_c = small_config("relkd_t_det_c");
    cfg_c.train.epochs = 3;
    cfg_c.seed = 4;
    auto ds_c = generate(cfg_c.data, cfg_c.seed);
    auto info_c = split(ds_c, SplitSpec{0.5, 0.5, cfg_c.seed});
    auto state_c = train(cfg_c, ds_c, info_c);
    CHECK_FALSE(same_bits(state_a.target_proto, state_c.target_proto));
}

TEST_CASE("gated modules stay untouched before their ramps") {
    // Ramps that never activate must leave the coarse prototypes, relation
    // logits and queue exactly at their initial state.
    auto cfg = small_config("relkd_t_gate");
    cfg.train.epochs = 3;
    cfg.ramp_c = {10, 20, 0.5};
    cfg.ramp_t2c = {20, 30, 0.5};
    auto ds = generate(cfg.data, cfg.seed);
    auto info = split(ds, SplitSpec{0.5, 0.5, cfg.seed});

    auto initial = init_state(cfg, ds.num_classes);
    auto state = train(cfg, ds, info);
    CHECK(same_bits(state.coarse_proto, initial.coarse_proto));
    CHECK(same_bits(state.rel_logits, initial.rel_logits));
    CHECK(state.queue.size() == 0);
    // the target side did train
    CHECK_FALSE(same_bits(state.target_proto, initial.target_proto));

    // disabling the modules outright produces the identical trajectory
    auto cfg_off = small_config("relkd_t_gate_off");
    cfg_off.train.epochs = 3;
    cfg_off.enable_cgm = false;
    cfg_off.enable_kdm = false;
    auto ds2 = generate(cfg_off.data, cfg_off.seed);
    auto info2 = split(ds2, SplitSpec{0.5, 0.5, cfg_off.seed});
    auto state_off = train(cfg_off, ds2, info2);
    CHECK(same_bits(state.encoder.w1, state_off.encoder.w1));
    CHECK(same_bits(state.target_proto, state_off.target_proto));
}

TEST_CASE("active coarse module fills the queue and moves its prototypes") {
    auto cfg = small_config("relkd_t_active");
    auto ds = generate(cfg.data, cfg.seed);
    auto info = split(ds, SplitSpec{0.5, 0.5, cfg.seed});
    auto initial = init_state(cfg, ds.num_classes);
    auto state = train(cfg, ds, info);
    CHECK_FALSE(same_bits(state.coarse_proto, initial.coarse_proto));
    CHECK_FALSE(same_bits(state.rel_logits, initial.rel_logits));
    CHECK(state.queue.size() > 0);
}

TEST_CASE("prototype rows stay unit-norm throughout training") {
    auto cfg = small_config("relkd_t_norm");
    auto ds = generate(cfg.data, cfg.seed);
    auto info = split(ds, SplitSpec{0.5, 0.5, cfg.seed});
    auto state = train(cfg, ds, info);
    for (const auto& bank : {state.target_proto, state.coarse_proto}) {
        for (int i = 0; i < bank->rows; ++i) {
            double sq = 0.0;
            for (int j = 0; j < bank->cols; ++j) {
                sq += bank->at(i, j) * bank->at(i, j);
            }
            CHECK(std::abs(sq - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("metrics file has one record per epoch with the full key set") {
    auto cfg = small_config("relkd_t_metrics");
    auto ds = generate(cfg.data, cfg.seed);
    auto info = split(ds, SplitSpec{0.5, 0.5, cfg.seed});
    std::vector<EpochRecord> history;
    train(cfg, ds, info, &history);
    REQUIRE(history.size() == 6);

    std::ifstream f(cfg.out_dir + "/metrics.jsonl");
    REQUIRE(f.good());
    int lines = 0;
    std::string line;
    while (std::getline(f, line)) {
        ++lines;
        for (const char* key :
             {"epoch", "L_target", "L_coarse", "L_t2c", "f_c", "f_t2c",
              "acc_all", "acc_seen", "acc_novel", "acc_coarse_mapped"}) {
            CHECK(line.find(std::string("\"") + key + "\"") != std::string::npos);
        }
    }
    CHECK(lines == 6);

    // accuracies live in [0,1]; ramp weights match the schedule
    for (const auto& rec : history) {
        CHECK(*rec.eval.acc_all >= 0.0);
        CHECK(*rec.eval.acc_all <= 1.0);
        CHECK(rec.losses.f_c == ramp_weight(cfg.ramp_c, rec.epoch));
    }
}

TEST_CASE("training reduces the target loss on an easy dataset") {
    auto cfg = small_config("relkd_t_smoke");
    cfg.train.epochs = 10;
    auto ds = generate(cfg.data, cfg.seed);
    auto info = split(ds, SplitSpec{0.5, 0.5, cfg.seed});
    std::vector<EpochRecord> history;
    train(cfg, ds, info, &history);
    CHECK(history.back().losses.l_target < history.front().losses.l_target);
    CHECK(*history.back().eval.acc_all > 0.3);
}

TEST_CASE("checkpoint round trip preserves every parameter bit") {
    auto cfg = small_config("relkd_t_ckpt");
    auto ds = generate(cfg.data, cfg.seed);
    auto info = split(ds, SplitSpec{0.5, 0.5, cfg.seed});
    auto state = train(cfg, ds, info);

    const auto path = cfg.out_dir + "/roundtrip.json";
    save_checkpoint(state, cfg.hash(), path);
    std::string hash;
    auto back = load_checkpoint(path, &hash);
    CHECK(hash == cfg.hash());
    CHECK(back.epoch == state.epoch);
    CHECK(same_bits(back.encoder.w1, state.encoder.w1));
    CHECK(same_bits(back.encoder.b1, state.encoder.b1));
    CHECK(same_bits(back.encoder.w2, state.encoder.w2));
    CHECK(same_bits(back.encoder.b2, state.encoder.b2));
    CHECK(same_bits(back.target_proto, state.target_proto));
    CHECK(same_bits(back.coarse_proto, state.coarse_proto));
    CHECK(same_bits(back.rel_logits, state.rel_logits));
    REQUIRE(back.queue.size() == state.queue.size());
    for (std::size_t i = 0; i < state.queue.size(); ++i) {
        CHECK(back.queue.entries()[i] == state.queue.entries()[i]);
    }

    // the restored model predicts identically
    const auto idx = ds.unlabeled_indices();
    CHECK(predict(back, ds, idx) == predict(state, ds, idx));
}

TEST_CASE("corrupt checkpoint headers are rejected") {
    const auto path =
        (std::filesystem::temp_directory_path() / "relkd_bad_ckpt.json").string();
    {
        std::ofstream f(path);
        f << R"({"format":"other","version":1})";
    }
    CHECK_THROWS(load_checkpoint(path));
    std::filesystem::remove(path);
}
