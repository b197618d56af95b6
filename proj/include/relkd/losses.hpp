#pragma once

#include <vector>

#include "relkd/tensor.hpp"

namespace relkd {

/// Softmax over cosine similarities between embedding rows and prototypes.
/// Prototypes are unit-normalized in-graph; Z rows are expected unit-norm.
/// Used for target, coarse and inferred-coarse probabilities alike.
/// tau divides the similarities; 1.0 leaves them raw.
TensorPtr prototype_probs(GradTape& tape, const TensorPtr& z,
                          const TensorPtr& prototypes, double tau = 1.0);

/// Supervised contrastive loss over the labeled part of the batch.
/// Anchors without any same-class positive are skipped; if every anchor is a
/// singleton the loss is 0 and *all_singleton is set.
TensorPtr supcon_loss(GradTape& tape, const TensorPtr& z_labeled,
                      const std::vector<int>& labels, double tau,
                      bool* all_singleton = nullptr);

/// InfoNCE between a batch and its augmented views. The default denominator
/// holds the positive plus the non-anchor originals; literal_denominator
/// switches to the originals only (including the anchor itself).
TensorPtr selfcon_loss(GradTape& tape, const TensorPtr& z,
                       const TensorPtr& z_aug, double tau,
                       bool literal_denominator = false);

/// Cross-entropy against ground-truth labels; rows of p are probabilities.
TensorPtr cls_loss_labeled(GradTape& tape, const TensorPtr& p,
                           const std::vector<int>& labels);

/// Cross-entropy against a fixed (stop-gradient) target distribution plus
/// the mean-prediction negative-entropy regularizer.
TensorPtr cls_loss_all(GradTape& tape, const TensorPtr& p,
                       const TensorPtr& q_target);

/// Cross-entropy against a fixed per-instance pseudo-super-label, no
/// regularizer.
TensorPtr coarse_cls_labeled(GradTape& tape, const TensorPtr& p_coarse,
                             const TensorPtr& pmq_target);

/// Negative mean cosine similarity over same-class pairs (positives only).
TensorPtr coarse_rep_labeled(GradTape& tape, const TensorPtr& z_labeled,
                             const std::vector<int>& labels,
                             bool* all_singleton = nullptr);

/// Probability-weighted alignment with the most likely super-class
/// prototype; argmax ties break to the lowest index.
TensorPtr coarse_rep_all(GradTape& tape, const TensorPtr& z,
                         const TensorPtr& coarse_prototypes);

/// lambda * l_labeled + (1 - lambda) * l_all.
TensorPtr mix_labeled_all(GradTape& tape, const TensorPtr& l_labeled,
                          const TensorPtr& l_all, double lambda);

/// Inferred coarse prototypes: row-softmax(relation logits) * target
/// prototypes, rows unit-normalized.
TensorPtr inferred_prototypes(GradTape& tape, const TensorPtr& relation_logits,
                              const TensorPtr& target_prototypes);

/// Cross-entropy from coarse predictions (teacher target) to inferred-coarse
/// predictions plus the negative-entropy regularizer on the inferred side.
TensorPtr distill_loss(GradTape& tape, const TensorPtr& p_coarse_target,
                       const TensorPtr& p_t2c);

/// Constant scalar tensor (no gradient).
TensorPtr const_scalar(double v);

/// Value copy of a graph tensor, detached from the tape.
TensorPtr detach(const TensorPtr& t);

}  // namespace relkd
