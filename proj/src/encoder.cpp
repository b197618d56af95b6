#include "relkd/encoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace relkd {

namespace {

TensorPtr uniform_init(std::mt19937_64& rng, int rows, int cols, int fan_in) {
    // Uniform with stddev sqrt(2/fan_in): half-width sqrt(6/fan_in).
    const double a = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> unif(-a, a);
    auto t = make_tensor(rows, cols, true);
    for (double& v : t->data) {
        v = unif(rng);
    }
    return t;
}

}  // namespace

EncoderParams encoder_init(std::uint64_t seed, int d_in, int h, int d) {
    if (d_in < 1 || h < 1 || d < 1) {
        throw std::invalid_argument("encoder_init: dims must be positive");
    }
    std::mt19937_64 rng(seed);
    EncoderParams p;
    p.w1 = uniform_init(rng, d_in, h, d_in);
    p.b1 = make_tensor(1, h, true);
    p.w2 = uniform_init(rng, h, d, h);
    p.b2 = make_tensor(1, d, true);
    return p;
}

TensorPtr encode(GradTape& tape, const EncoderParams& params,
                 const TensorPtr& x) {
    if (x->cols != params.d_in()) {
        throw std::invalid_argument("encode: input dim mismatch");
    }
    auto h = tape.relu(tape.add_rowvec(tape.matmul(x, params.w1), params.b1));
    auto z = tape.add_rowvec(tape.matmul(h, params.w2), params.b2);
    return tape.l2_normalize_rows(z);
}

}  // namespace relkd
