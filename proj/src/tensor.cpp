#include "relkd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "relkd/kernels.hpp"

namespace relkd {

namespace {

void check_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->rows != b->rows || a->cols != b->cols) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    std::to_string(a->rows) + "x" + std::to_string(a->cols) +
                                    " vs " + std::to_string(b->rows) + "x" +
                                    std::to_string(b->cols));
    }
}

}  // namespace

double Tensor2::item() const {
    if (rows != 1 || cols != 1) {
        throw std::invalid_argument("item: tensor is not 1x1");
    }
    return data[0];
}

void Tensor2::zero_grad() {
    grad.assign(data.size(), 0.0);
}

bool Tensor2::all_finite() const {
    return std::all_of(data.begin(), data.end(),
                       [](double v) { return std::isfinite(v); });
}

TensorPtr make_tensor(int rows, int cols, bool requires_grad) {
    if (rows <= 0 || cols <= 0) {
        throw std::invalid_argument("make_tensor: non-positive dims");
    }
    auto t = std::make_shared<Tensor2>();
    t->rows = rows;
    t->cols = cols;
    t->data.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr make_tensor(int rows, int cols, std::vector<double> data,
                      bool requires_grad) {
    if (rows <= 0 || cols <= 0 ||
        data.size() != static_cast<std::size_t>(rows) * cols) {
        throw std::invalid_argument("make_tensor: dims do not match data length");
    }
    auto t = std::make_shared<Tensor2>();
    t->rows = rows;
    t->cols = cols;
    t->data = std::move(data);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr GradTape::record(TensorPtr out, std::vector<TensorPtr> inputs,
                           std::function<void()> back) {
    nodes_.push_back(Node{out, std::move(inputs), std::move(back)});
    return out;
}

TensorPtr GradTape::matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->cols != b->rows) {
        throw std::invalid_argument("matmul: inner dims disagree (" +
                                    std::to_string(a->cols) + " vs " +
                                    std::to_string(b->rows) + ")");
    }
    auto out = make_tensor(a->rows, b->cols);
    kernels::matmul(a->data.data(), b->data.data(), out->data.data(),
                    a->rows, a->cols, b->cols);
    return record(out, {a, b}, [a, b, out]() {
        // dA = g * B^T, dB = A^T * g
        const int n = a->rows, k = a->cols, m = b->cols;
        for (int i = 0; i < n; ++i) {
            for (int p = 0; p < k; ++p) {
                double acc = 0.0;
                for (int j = 0; j < m; ++j) {
                    acc += out->g(i, j) * b->at(p, j);
                }
                a->g(i, p) += acc;
            }
        }
        for (int p = 0; p < k; ++p) {
            for (int j = 0; j < m; ++j) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i) {
                    acc += a->at(i, p) * out->g(i, j);
                }
                b->g(p, j) += acc;
            }
        }
    });
}

TensorPtr GradTape::transpose(const TensorPtr& a) {
    auto out = make_tensor(a->cols, a->rows);
    for (int i = 0; i < a->rows; ++i) {
        for (int j = 0; j < a->cols; ++j) {
            out->at(j, i) = a->at(i, j);
        }
    }
    return record(out, {a}, [a, out]() {
        for (int i = 0; i < a->rows; ++i) {
            for (int j = 0; j < a->cols; ++j) {
                a->g(i, j) += out->g(j, i);
            }
        }
    });
}

TensorPtr GradTape::add(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "add");
    auto out = make_tensor(a->rows, a->cols);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = a->data[i] + b->data[i];
    }
    return record(out, {a, b}, [a, b, out]() {
        for (std::size_t i = 0; i < out->size(); ++i) {
            a->grad[i] += out->grad[i];
            b->grad[i] += out->grad[i];
        }
    });
}

TensorPtr GradTape::sub(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "sub");
    auto out = make_tensor(a->rows, a->cols);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = a->data[i] - b->data[i];
    }
    return record(out, {a, b}, [a, b, out]() {
        for (std::size_t i = 0; i < out->size(); ++i) {
            a->grad[i] += out->grad[i];
            b->grad[i] -= out->grad[i];
        }
    });
}

TensorPtr GradTape::mul(const TensorPtr& a, const TensorPtr& b) {
    check_same_shape(a, b, "mul");
    auto out = make_tensor(a->rows, a->cols);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = a->data[i] * b->data[i];
    }
    return record(out, {a, b}, [a, b, out]() {
        for (std::size_t i = 0; i < out->size(); ++i) {
            a->grad[i] += out->grad[i] * b->data[i];
            b->grad[i] += out->grad[i] * a->data[i];
        }
    });
}

TensorPtr GradTape::scale(const TensorPtr& a, double s) {
    auto out = make_tensor(a->rows, a->cols);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = a->data[i] * s;
    }
    return record(out, {a}, [a, out, s]() {
        for (std::size_t i = 0; i < out->size(); ++i) {
            a->grad[i] += out->grad[i] * s;
        }
    });
}

TensorPtr GradTape::add_rowvec(const TensorPtr& a, const TensorPtr& b) {
    if (b->rows != 1 || b->cols != a->cols) {
        throw std::invalid_argument("add_rowvec: b must be 1 x cols(a)");
    }
    auto out = make_tensor(a->rows, a->cols);
    for (int i = 0; i < a->rows; ++i) {
        for (int j = 0; j < a->cols; ++j) {
            out->at(i, j) = a->at(i, j) + b->at(0, j);
        }
    }
    return record(out, {a, b}, [a, b, out]() {
        for (int i = 0; i < a->rows; ++i) {
            for (int j = 0; j < a->cols; ++j) {
                a->g(i, j) += out->g(i, j);
                b->g(0, j) += out->g(i, j);
            }
        }
    });
}

TensorPtr GradTape::exp(const TensorPtr& a) {
    auto out = make_tensor(a->rows, a->cols);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = std::exp(a->data[i]);
    }
    return record(out, {a}, [a, out]() {
        for (std::size_t i = 0; i < out->size(); ++i) {
            a->grad[i] += out->grad[i] * out->data[i];
        }
    });
}

TensorPtr GradTape::log_clamped(const TensorPtr& a) {
    auto out = make_tensor(a->rows, a->cols);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = std::log(std::max(a->data[i], kLogClampFloor));
    }
    return record(out, {a}, [a, out]() {
        for (std::size_t i = 0; i < out->size(); ++i) {
            if (a->data[i] > kLogClampFloor) {
                a->grad[i] += out->grad[i] / a->data[i];
            }
        }
    });
}

TensorPtr GradTape::relu(const TensorPtr& a) {
    auto out = make_tensor(a->rows, a->cols);
    for (std::size_t i = 0; i < out->size(); ++i) {
        out->data[i] = a->data[i] > 0.0 ? a->data[i] : 0.0;
    }
    return record(out, {a}, [a, out]() {
        for (std::size_t i = 0; i < out->size(); ++i) {
            if (a->data[i] > 0.0) {
                a->grad[i] += out->grad[i];
            }
        }
    });
}

TensorPtr GradTape::l2_normalize_rows(const TensorPtr& a) {
    auto out = make_tensor(a->rows, a->cols);
    std::vector<double> norms(a->rows);
    for (int i = 0; i < a->rows; ++i) {
        double sq = 0.0;
        for (int j = 0; j < a->cols; ++j) {
            sq += a->at(i, j) * a->at(i, j);
        }
        const double norm = std::sqrt(sq);
        if (norm < kRowNormFloor) {
            throw std::domain_error("l2_normalize_rows: zero-norm row " +
                                    std::to_string(i));
        }
        norms[i] = norm;
        for (int j = 0; j < a->cols; ++j) {
            out->at(i, j) = a->at(i, j) / norm;
        }
    }
    return record(out, {a}, [a, out, norms = std::move(norms)]() {
        // dX = (dY - Y * (Y . dY)) / ||x||, per row
        for (int i = 0; i < a->rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < a->cols; ++j) {
                dot += out->at(i, j) * out->g(i, j);
            }
            for (int j = 0; j < a->cols; ++j) {
                a->g(i, j) += (out->g(i, j) - out->at(i, j) * dot) / norms[i];
            }
        }
    });
}

TensorPtr GradTape::softmax_rows(const TensorPtr& a) {
    auto out = make_tensor(a->rows, a->cols);
    for (int i = 0; i < a->rows; ++i) {
        double mx = a->at(i, 0);
        for (int j = 1; j < a->cols; ++j) {
            mx = std::max(mx, a->at(i, j));
        }
        double denom = 0.0;
        for (int j = 0; j < a->cols; ++j) {
            out->at(i, j) = std::exp(a->at(i, j) - mx);
            denom += out->at(i, j);
        }
        for (int j = 0; j < a->cols; ++j) {
            out->at(i, j) /= denom;
        }
    }
    return record(out, {a}, [a, out]() {
        // dS = P . (dP - rowsum(dP . P))
        for (int i = 0; i < a->rows; ++i) {
            double inner = 0.0;
            for (int j = 0; j < a->cols; ++j) {
                inner += out->g(i, j) * out->at(i, j);
            }
            for (int j = 0; j < a->cols; ++j) {
                a->g(i, j) += out->at(i, j) * (out->g(i, j) - inner);
            }
        }
    });
}

TensorPtr GradTape::row_sum(const TensorPtr& a) {
    auto out = make_tensor(a->rows, 1);
    for (int i = 0; i < a->rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < a->cols; ++j) {
            acc += a->at(i, j);
        }
        out->at(i, 0) = acc;
    }
    return record(out, {a}, [a, out]() {
        for (int i = 0; i < a->rows; ++i) {
            for (int j = 0; j < a->cols; ++j) {
                a->g(i, j) += out->g(i, 0);
            }
        }
    });
}

TensorPtr GradTape::sum(const TensorPtr& a) {
    auto out = make_tensor(1, 1);
    double acc = 0.0;
    for (double v : a->data) {
        acc += v;
    }
    out->data[0] = acc;
    return record(out, {a}, [a, out]() {
        for (std::size_t i = 0; i < a->size(); ++i) {
            a->grad[i] += out->grad[0];
        }
    });
}

TensorPtr GradTape::slice_rows(const TensorPtr& a, int begin, int count) {
    if (begin < 0 || count <= 0 || begin + count > a->rows) {
        throw std::invalid_argument("slice_rows: range out of bounds");
    }
    auto out = make_tensor(count, a->cols);
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < a->cols; ++j) {
            out->at(i, j) = a->at(begin + i, j);
        }
    }
    return record(out, {a}, [a, out, begin, count]() {
        for (int i = 0; i < count; ++i) {
            for (int j = 0; j < a->cols; ++j) {
                a->g(begin + i, j) += out->g(i, j);
            }
        }
    });
}

void GradTape::backward(const TensorPtr& loss) {
    if (loss->rows != 1 || loss->cols != 1) {
        throw std::invalid_argument("backward: loss must be a 1x1 tensor");
    }
    for (auto& node : nodes_) {
        node.out->zero_grad();
        for (auto& in : node.inputs) {
            in->zero_grad();
        }
    }
    loss->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        it->back();
    }
}

}  // namespace relkd
