#include "relkd/queue.hpp"

#include <cmath>
#include <stdexcept>

namespace relkd {

void MemoryQueue::push(const std::vector<int>& labels,
                       const std::vector<std::vector<double>>& probs) {
    if (labels.size() != probs.size()) {
        throw std::invalid_argument("MemoryQueue::push: labels/probs size mismatch");
    }
    for (const auto& p : probs) {
        double s = 0.0;
        for (double v : p) {
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6) {
            throw std::invalid_argument(
                "MemoryQueue::push: prob row not normalized (sum=" +
                std::to_string(s) + ")");
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        entries_.emplace_back(labels[i], probs[i]);
    }
    while (entries_.size() > capacity_) {
        entries_.pop_front();
    }
}

bool MemoryQueue::pseudo_super_label(int label, std::vector<double>& out) const {
    std::size_t count = 0;
    for (const auto& [y, p] : entries_) {
        if (y != label) {
            continue;
        }
        if (count == 0) {
            out.assign(p.size(), 0.0);
        }
        for (std::size_t j = 0; j < p.size(); ++j) {
            out[j] += p[j];
        }
        ++count;
    }
    if (count == 0) {
        return false;
    }
    for (double& v : out) {
        v /= static_cast<double>(count);
    }
    return true;
}

}  // namespace relkd
