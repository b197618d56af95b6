#include "relkd/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace relkd {

namespace {

/// Potential-based O(n^3) minimum-cost assignment. Returns row -> column.
std::vector<int> solve_min(const std::vector<std::vector<double>>& a,
                           double* total = nullptr) {
    const int n = static_cast<int>(a.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(n, -1);
    double cost = 0.0;
    for (int j = 1; j <= n; ++j) {
        assignment[p[j] - 1] = j - 1;
        cost += a[p[j] - 1][j - 1];
    }
    if (total != nullptr) {
        *total = cost;
    }
    return assignment;
}

}  // namespace

std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) {
        return {};
    }
    double max_abs = 0.0;
    for (const auto& row : cost) {
        if (static_cast<int>(row.size()) != n) {
            throw std::invalid_argument("hungarian: cost matrix must be square");
        }
        for (double v : row) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("hungarian: non-finite cost");
            }
            max_abs = std::max(max_abs, std::abs(v));
        }
    }

    double best;
    solve_min(cost, &best);
    const double tol = 1e-7 * (1.0 + std::abs(best));
    const double forbid = (max_abs + 1.0) * n * 4.0;

    // Fix rows in order, choosing the smallest column that still permits an
    // optimal completion; yields the lexicographically smallest optimum.
    std::vector<int> fixed(n, -1);
    std::vector<bool> col_used(n, false);
    auto modified = cost;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (col_used[j]) {
                continue;
            }
            for (int jj = 0; jj < n; ++jj) {
                modified[i][jj] = (jj == j) ? cost[i][j] : forbid;
            }
            double total;
            solve_min(modified, &total);
            if (total <= best + tol) {
                fixed[i] = j;
                col_used[j] = true;
                break;
            }
            // restore row before trying the next column
            modified[i] = cost[i];
        }
        if (fixed[i] == -1) {
            throw std::logic_error("hungarian: no optimal completion found");
        }
    }
    return fixed;
}

EvalReport clustering_acc(const std::vector<int>& preds,
                          const std::vector<int>& truths,
                          const std::vector<bool>& seen_mask, int k) {
    const std::size_t n = preds.size();
    if (truths.size() != n || seen_mask.size() != n) {
        throw std::invalid_argument("clustering_acc: input sizes disagree");
    }
    if (n == 0 || k < 1) {
        throw std::invalid_argument("clustering_acc: empty input");
    }
    std::vector<std::vector<int>> confusion(k, std::vector<int>(k, 0));
    int max_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (preds[i] < 0 || preds[i] >= k || truths[i] < 0 || truths[i] >= k) {
            throw std::invalid_argument("clustering_acc: label out of range");
        }
        max_count = std::max(max_count, ++confusion[truths[i]][preds[i]]);
    }

    // Rows are predicted clusters, columns true classes; maximize matched
    // counts by minimizing (max_count - count).
    std::vector<std::vector<double>> cost(k, std::vector<double>(k));
    for (int p = 0; p < k; ++p) {
        for (int t = 0; t < k; ++t) {
            cost[p][t] = static_cast<double>(max_count - confusion[t][p]);
        }
    }
    EvalReport report;
    report.permutation = hungarian(cost);
    report.confusion = confusion;

    long all_hit = 0, seen_hit = 0, novel_hit = 0;
    long seen_n = 0, novel_n = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool hit = report.permutation[preds[i]] == truths[i];
        all_hit += hit;
        if (seen_mask[i]) {
            ++seen_n;
            seen_hit += hit;
        } else {
            ++novel_n;
            novel_hit += hit;
        }
    }
    report.acc_all = static_cast<double>(all_hit) / static_cast<double>(n);
    if (seen_n > 0) {
        report.acc_seen = static_cast<double>(seen_hit) / static_cast<double>(seen_n);
    }
    if (novel_n > 0) {
        report.acc_novel =
            static_cast<double>(novel_hit) / static_cast<double>(novel_n);
    }
    return report;
}

double coarse_mapped_acc(const std::vector<int>& preds,
                         const std::vector<int>& truths,
                         const std::vector<int>& permutation,
                         const std::vector<int>& class_to_super) {
    if (preds.size() != truths.size()) {
        throw std::invalid_argument("coarse_mapped_acc: input sizes disagree");
    }
    long hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int mapped = permutation[preds[i]];
        if (mapped < 0 || mapped >= static_cast<int>(class_to_super.size()) ||
            truths[i] < 0 || truths[i] >= static_cast<int>(class_to_super.size()) ||
            class_to_super[mapped] < 0 || class_to_super[truths[i]] < 0) {
            throw std::invalid_argument("coarse_mapped_acc: unmapped class");
        }
        hit += class_to_super[mapped] == class_to_super[truths[i]];
    }
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

}  // namespace relkd
