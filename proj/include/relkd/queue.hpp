#pragma once

#include <deque>
#include <utility>
#include <vector>

namespace relkd {

/// Bounded FIFO of (target label, coarse probability vector) pairs used to
/// estimate pseudo-super-class labels for labeled instances.
class MemoryQueue {
public:
    explicit MemoryQueue(std::size_t capacity) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return entries_.size(); }

    /// Appends one batch of (label, probs); evicts oldest past capacity.
    /// Throws if any prob row does not sum to 1 within 1e-6.
    void push(const std::vector<int>& labels,
              const std::vector<std::vector<double>>& probs);

    /// Elementwise mean of stored vectors with the given label. Returns false
    /// (and leaves out untouched) when no such entry exists.
    bool pseudo_super_label(int label, std::vector<double>& out) const;

    const std::deque<std::pair<int, std::vector<double>>>& entries() const {
        return entries_;
    }

    void restore(std::deque<std::pair<int, std::vector<double>>> entries) {
        entries_ = std::move(entries);
    }

private:
    std::size_t capacity_;
    std::deque<std::pair<int, std::vector<double>>> entries_;
};

}  // namespace relkd
