#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "relkd/config.hpp"
#include "relkd/data.hpp"
#include "relkd/encoder.hpp"
#include "relkd/evaluate.hpp"
#include "relkd/queue.hpp"
#include "relkd/tensor.hpp"

namespace relkd {

struct SgdSlot {
    std::vector<double> velocity;
};

struct ModelState {
    EncoderParams encoder;
    TensorPtr target_proto;  // K x d
    TensorPtr coarse_proto;  // Kc x d
    TensorPtr rel_logits;    // Kc x K
    MemoryQueue queue{1024};
    int epoch = 0;  // completed epochs
    // Coarse prototypes are re-seeded from live embeddings (farthest-point
    // selection) on the first step the coarse ramp is active; random unit
    // vectors sit orthogonal to every embedding cluster, which leaves the
    // coarse softmax uniform and the module unable to break symmetry.
    bool coarse_seeded = false;

    SgdSlot vel_w1, vel_b1, vel_w2, vel_b2;
    SgdSlot vel_target, vel_coarse, vel_rel;
};

ModelState init_state(const ExperimentConfig& cfg, int num_classes);

/// Classical momentum SGD with weight decay:
///   v <- mu*v + g + wd*theta;  theta <- theta - lr*v
void sgd_update(Tensor2& param, SgdSlot& slot, double lr, double momentum,
                double weight_decay);

struct Batch {
    std::vector<int> indices;  // dataset indices, labeled rows first
    int num_labeled = 0;
    TensorPtr x1;              // view 1 features
    TensorPtr x2;              // view 2 features
    std::vector<int> labels;   // for the labeled rows
};

/// Draws batches without replacement from the labeled and unlabeled pools,
/// reshuffling each pool when exhausted.
class BatchSampler {
public:
    BatchSampler(const Dataset& dataset, const TrainConfig& cfg,
                 std::uint64_t seed);

    Batch next();

private:
    const Dataset& dataset_;
    TrainConfig cfg_;
    std::mt19937_64 rng_;
    std::vector<int> labeled_, unlabeled_;
    std::size_t labeled_pos_ = 0, unlabeled_pos_ = 0;

    int draw_labeled();
    int draw_unlabeled();
};

struct LossBreakdown {
    double sup_rep = 0, self_rep = 0, cls_labeled = 0, cls_all = 0;
    double c_cls_labeled = 0, c_cls_all = 0, c_rep_labeled = 0, c_rep_all = 0;
    double t2c = 0;
    double l_target = 0, l_coarse = 0, l_t2c = 0;
    double f_c = 0, f_t2c = 0;
    double total = 0;
};

/// One forward/backward/SGD update at epoch t (1-based). Coarse and relation
/// parameters are only touched when their ramp weight is nonzero.
LossBreakdown train_step(ModelState& state, const Batch& batch, int t,
                         const ExperimentConfig& cfg);

struct EpochRecord {
    int epoch = 0;
    LossBreakdown losses;
    EvalReport eval;
    double acc_coarse_mapped = 0;
};

/// Predictions (argmax target probability) for the given instances.
std::vector<int> predict(const ModelState& state, const Dataset& dataset,
                         const std::vector<int>& indices);

EvalReport evaluate_model(const ModelState& state, const Dataset& dataset,
                          const std::vector<int>& seen_classes);

/// Full training run; writes metrics.jsonl and checkpoint.json under
/// cfg.out_dir. Returns the final state.
ModelState train(const ExperimentConfig& cfg, const Dataset& dataset,
                 const SplitInfo& info,
                 std::vector<EpochRecord>* history = nullptr);

void save_checkpoint(const ModelState& state, const std::string& config_hash,
                     const std::string& path);
ModelState load_checkpoint(const std::string& path,
                           std::string* config_hash = nullptr);

void write_affinity_csv(const ModelState& state, const std::string& path);

}  // namespace relkd
