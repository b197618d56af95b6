#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace relkd {

struct Tensor2;
using TensorPtr = std::shared_ptr<Tensor2>;

/// Dense row-major 2-D tensor. Gradients are stored alongside the data and
/// filled in by GradTape::backward.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    double& g(int r, int c) { return grad[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return data.size(); }

    /// Value of a 1x1 tensor.
    double item() const;

    void zero_grad();
    bool all_finite() const;
};

TensorPtr make_tensor(int rows, int cols, bool requires_grad = false);
TensorPtr make_tensor(int rows, int cols, std::vector<double> data,
                      bool requires_grad = false);

/// Records executed ops in order; backward() replays them in exact reverse
/// order, accumulating gradients into each tensor's grad buffer.
class GradTape {
public:
    TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
    TensorPtr transpose(const TensorPtr& a);
    TensorPtr add(const TensorPtr& a, const TensorPtr& b);
    TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
    TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
    TensorPtr scale(const TensorPtr& a, double s);
    TensorPtr add_rowvec(const TensorPtr& a, const TensorPtr& b);  // b is 1 x cols
    TensorPtr exp(const TensorPtr& a);
    TensorPtr log_clamped(const TensorPtr& a);  // log(max(x, 1e-12))
    TensorPtr relu(const TensorPtr& a);
    TensorPtr l2_normalize_rows(const TensorPtr& a);
    TensorPtr softmax_rows(const TensorPtr& a);
    TensorPtr row_sum(const TensorPtr& a);  // n x 1
    TensorPtr sum(const TensorPtr& a);      // 1 x 1
    TensorPtr slice_rows(const TensorPtr& a, int begin, int count);

    /// Populates grad for every tensor reachable from the tape; loss must be
    /// a 1x1 tensor produced by this tape.
    void backward(const TensorPtr& loss);

    std::size_t num_ops() const { return nodes_.size(); }

private:
    struct Node {
        TensorPtr out;
        std::vector<TensorPtr> inputs;
        std::function<void()> back;
    };
    std::vector<Node> nodes_;

    TensorPtr record(TensorPtr out, std::vector<TensorPtr> inputs,
                     std::function<void()> back);
};

constexpr double kLogClampFloor = 1e-12;
constexpr double kRowNormFloor = 1e-12;

}  // namespace relkd
