#pragma once

#include <cstdint>

#include "relkd/tensor.hpp"

namespace relkd {

/// Two-layer MLP feature encoder, output rows L2-normalized.
struct EncoderParams {
    TensorPtr w1;  // d_in x h
    TensorPtr b1;  // 1 x h
    TensorPtr w2;  // h x d
    TensorPtr b2;  // 1 x d

    int d_in() const { return w1->rows; }
    int hidden() const { return w1->cols; }
    int d() const { return w2->cols; }
};

EncoderParams encoder_init(std::uint64_t seed, int d_in, int h, int d);

/// z = normalize(relu(x W1 + b1) W2 + b2), row-wise unit norm.
TensorPtr encode(GradTape& tape, const EncoderParams& params,
                 const TensorPtr& x);

}  // namespace relkd
