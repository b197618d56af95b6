#include "relkd/losses.hpp"

#include <stdexcept>
#include <string>

namespace relkd {

namespace {

void check_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->rows != b->rows || a->cols != b->cols) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
    }
}

/// Off-diagonal 0/1 mask, n x n.
TensorPtr offdiag_mask(int n) {
    auto m = make_tensor(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            m->at(i, j) = (i == j) ? 0.0 : 1.0;
        }
    }
    return m;
}

TensorPtr identity_mask(int n) {
    auto m = make_tensor(n, n);
    for (int i = 0; i < n; ++i) {
        m->at(i, i) = 1.0;
    }
    return m;
}

}  // namespace

TensorPtr const_scalar(double v) {
    return make_tensor(1, 1, std::vector<double>{v});
}

TensorPtr detach(const TensorPtr& t) {
    return make_tensor(t->rows, t->cols, t->data);
}

TensorPtr prototype_probs(GradTape& tape, const TensorPtr& z,
                          const TensorPtr& prototypes, double tau) {
    if (z->cols != prototypes->cols) {
        throw std::invalid_argument("prototype_probs: embedding dim mismatch");
    }
    if (tau <= 0.0) {
        throw std::invalid_argument("prototype_probs: tau must be positive");
    }
    auto c = tape.l2_normalize_rows(prototypes);
    auto sims = tape.matmul(z, tape.transpose(c));
    if (tau != 1.0) {
        sims = tape.scale(sims, 1.0 / tau);
    }
    return tape.softmax_rows(sims);
}

TensorPtr supcon_loss(GradTape& tape, const TensorPtr& z_labeled,
                      const std::vector<int>& labels, double tau,
                      bool* all_singleton) {
    const int n = z_labeled->rows;
    if (static_cast<int>(labels.size()) != n) {
        throw std::invalid_argument("supcon_loss: label count mismatch");
    }
    if (tau <= 0.0) {
        throw std::invalid_argument("supcon_loss: tau must be positive");
    }

    // Positive sets; anchors are instances with at least one same-class peer.
    std::vector<std::vector<int>> positives(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j != i && labels[j] == labels[i]) {
                positives[i].push_back(j);
            }
        }
    }
    int num_anchors = 0;
    for (int i = 0; i < n; ++i) {
        if (!positives[i].empty()) {
            ++num_anchors;
        }
    }
    if (all_singleton != nullptr) {
        *all_singleton = (num_anchors == 0);
    }
    if (num_anchors == 0) {
        return const_scalar(0.0);
    }

    auto sims = tape.scale(
        tape.matmul(z_labeled, tape.transpose(z_labeled)), 1.0 / tau);
    auto denom = tape.row_sum(tape.mul(tape.exp(sims), offdiag_mask(n)));

    auto anchor_weights = make_tensor(n, 1);
    auto pos_weights = make_tensor(n, n);
    for (int i = 0; i < n; ++i) {
        if (positives[i].empty()) {
            continue;
        }
        anchor_weights->at(i, 0) = 1.0 / num_anchors;
        const double w = 1.0 / (static_cast<double>(num_anchors) *
                                static_cast<double>(positives[i].size()));
        for (int p : positives[i]) {
            pos_weights->at(i, p) = w;
        }
    }

    auto log_denom_term =
        tape.sum(tape.mul(anchor_weights, tape.log_clamped(denom)));
    auto pos_term = tape.sum(tape.mul(pos_weights, sims));
    return tape.sub(log_denom_term, pos_term);
}

TensorPtr selfcon_loss(GradTape& tape, const TensorPtr& z,
                       const TensorPtr& z_aug, double tau,
                       bool literal_denominator) {
    check_same_shape(z, z_aug, "selfcon_loss");
    if (tau <= 0.0) {
        throw std::invalid_argument("selfcon_loss: tau must be positive");
    }
    const int n = z->rows;
    if (n == 0) {
        throw std::invalid_argument("selfcon_loss: empty batch");
    }

    auto sims = tape.scale(tape.matmul(z, tape.transpose(z)), 1.0 / tau);
    auto sims_pos = tape.scale(tape.matmul(z, tape.transpose(z_aug)), 1.0 / tau);
    auto eye = identity_mask(n);

    TensorPtr denom;
    if (literal_denominator) {
        denom = tape.row_sum(tape.exp(sims));
    } else {
        auto neg = tape.row_sum(tape.mul(tape.exp(sims), offdiag_mask(n)));
        auto pos = tape.row_sum(tape.mul(tape.exp(sims_pos), eye));
        denom = tape.add(neg, pos);
    }
    auto log_denom = tape.sum(tape.log_clamped(denom));
    auto pos_logit = tape.sum(tape.mul(eye, sims_pos));
    return tape.scale(tape.sub(log_denom, pos_logit), 1.0 / n);
}

TensorPtr cls_loss_labeled(GradTape& tape, const TensorPtr& p,
                           const std::vector<int>& labels) {
    const int n = p->rows;
    if (static_cast<int>(labels.size()) != n) {
        throw std::invalid_argument("cls_loss_labeled: label count mismatch");
    }
    auto onehot = make_tensor(n, p->cols);
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= p->cols) {
            throw std::invalid_argument("cls_loss_labeled: label id " +
                                        std::to_string(labels[i]) +
                                        " out of range");
        }
        onehot->at(i, labels[i]) = 1.0;
    }
    return tape.scale(tape.sum(tape.mul(onehot, tape.log_clamped(p))),
                      -1.0 / n);
}

TensorPtr cls_loss_all(GradTape& tape, const TensorPtr& p,
                       const TensorPtr& q_target) {
    check_same_shape(p, q_target, "cls_loss_all");
    const int n = p->rows;
    auto ce = tape.scale(tape.sum(tape.mul(q_target, tape.log_clamped(p))),
                         -1.0 / n);
    auto ones = make_tensor(1, n);
    for (double& v : ones->data) {
        v = 1.0;
    }
    auto mean_pred = tape.scale(tape.matmul(ones, p), 1.0 / n);  // 1 x K
    auto reg = tape.sum(tape.mul(mean_pred, tape.log_clamped(mean_pred)));
    return tape.add(ce, reg);
}

TensorPtr coarse_cls_labeled(GradTape& tape, const TensorPtr& p_coarse,
                             const TensorPtr& pmq_target) {
    check_same_shape(p_coarse, pmq_target, "coarse_cls_labeled");
    const int n = p_coarse->rows;
    return tape.scale(
        tape.sum(tape.mul(pmq_target, tape.log_clamped(p_coarse))), -1.0 / n);
}

TensorPtr coarse_rep_labeled(GradTape& tape, const TensorPtr& z_labeled,
                             const std::vector<int>& labels,
                             bool* all_singleton) {
    const int n = z_labeled->rows;
    if (static_cast<int>(labels.size()) != n) {
        throw std::invalid_argument("coarse_rep_labeled: label count mismatch");
    }
    std::vector<std::vector<int>> positives(n);
    int num_anchors = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j != i && labels[j] == labels[i]) {
                positives[i].push_back(j);
            }
        }
        if (!positives[i].empty()) {
            ++num_anchors;
        }
    }
    if (all_singleton != nullptr) {
        *all_singleton = (num_anchors == 0);
    }
    if (num_anchors == 0) {
        return const_scalar(0.0);
    }
    auto weights = make_tensor(n, n);
    for (int i = 0; i < n; ++i) {
        if (positives[i].empty()) {
            continue;
        }
        const double w = 1.0 / (static_cast<double>(num_anchors) *
                                static_cast<double>(positives[i].size()));
        for (int p : positives[i]) {
            weights->at(i, p) = w;
        }
    }
    auto sims = tape.matmul(z_labeled, tape.transpose(z_labeled));
    return tape.scale(tape.sum(tape.mul(weights, sims)), -1.0);
}

TensorPtr coarse_rep_all(GradTape& tape, const TensorPtr& z,
                         const TensorPtr& coarse_prototypes) {
    const int n = z->rows;
    auto p = prototype_probs(tape, z, coarse_prototypes);
    // Select each row's argmax (ties to the lowest index); selection itself
    // is not differentiated.
    auto select = make_tensor(n, p->cols);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int k = 1; k < p->cols; ++k) {
            if (p->at(i, k) > p->at(i, best)) {
                best = k;
            }
        }
        select->at(i, best) = 1.0;
    }
    auto weighted = tape.mul(p, tape.log_clamped(p));
    return tape.scale(tape.sum(tape.mul(select, weighted)), -1.0 / n);
}

TensorPtr mix_labeled_all(GradTape& tape, const TensorPtr& l_labeled,
                          const TensorPtr& l_all, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) {
        throw std::invalid_argument("mix_labeled_all: lambda must be in [0,1]");
    }
    return tape.add(tape.scale(l_labeled, lambda),
                    tape.scale(l_all, 1.0 - lambda));
}

TensorPtr inferred_prototypes(GradTape& tape, const TensorPtr& relation_logits,
                              const TensorPtr& target_prototypes) {
    if (relation_logits->cols != target_prototypes->rows) {
        throw std::invalid_argument(
            "inferred_prototypes: relation cols must equal target class count");
    }
    auto affinity = tape.softmax_rows(relation_logits);
    return tape.l2_normalize_rows(tape.matmul(affinity, target_prototypes));
}

TensorPtr distill_loss(GradTape& tape, const TensorPtr& p_coarse_target,
                       const TensorPtr& p_t2c) {
    check_same_shape(p_coarse_target, p_t2c, "distill_loss");
    const int n = p_t2c->rows;
    auto ce = tape.scale(
        tape.sum(tape.mul(p_coarse_target, tape.log_clamped(p_t2c))),
        -1.0 / n);
    auto ones = make_tensor(1, n);
    for (double& v : ones->data) {
        v = 1.0;
    }
    auto mean_pred = tape.scale(tape.matmul(ones, p_t2c), 1.0 / n);
    auto reg = tape.sum(tape.mul(mean_pred, tape.log_clamped(mean_pred)));
    return tape.add(ce, reg);
}

}  // namespace relkd
