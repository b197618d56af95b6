#pragma once

#include <optional>
#include <vector>

namespace relkd {

/// Minimum-cost assignment for a square cost matrix. Among optimal
/// assignments, returns the lexicographically smallest (row 0's column
/// minimal, then row 1's, ...).
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost);

struct EvalReport {
    std::optional<double> acc_all;
    std::optional<double> acc_seen;
    std::optional<double> acc_novel;
    std::optional<double> acc_coarse_mapped;
    std::vector<int> permutation;            // predicted cluster -> true class
    std::vector<std::vector<int>> confusion; // [true][pred] counts
};

/// Hungarian-matched clustering accuracy. One permutation is fit on all
/// instances and reused for the seen/novel breakdown. seen_mask marks
/// instances whose true class is a seen class.
EvalReport clustering_acc(const std::vector<int>& preds,
                          const std::vector<int>& truths,
                          const std::vector<bool>& seen_mask, int k);

/// Fraction of instances whose permuted prediction falls in the same
/// super-class as the truth. preds here are raw cluster ids; the permutation
/// from clustering_acc is applied internally.
double coarse_mapped_acc(const std::vector<int>& preds,
                         const std::vector<int>& truths,
                         const std::vector<int>& permutation,
                         const std::vector<int>& class_to_super);

}  // namespace relkd
