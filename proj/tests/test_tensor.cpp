#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fd_check.hpp"
#include "relkd/tensor.hpp"

using relkd::GradTape;
using relkd::make_tensor;
using relkd::TensorPtr;

namespace {

TensorPtr random_tensor(std::mt19937_64& rng, int rows, int cols,
                        bool requires_grad = true) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto t = make_tensor(rows, cols, requires_grad);
    for (double& v : t->data) {
        v = unif(rng);
    }
    return t;
}

}  // namespace

TEST_CASE("matmul identity and hand arithmetic") {
    GradTape tape;
    auto eye = make_tensor(2, 2, {1, 0, 0, 1});
    auto m = make_tensor(2, 2, {3, -1, 2, 5});
    auto prod = tape.matmul(eye, m);
    for (std::size_t i = 0; i < m->data.size(); ++i) {
        CHECK(prod->data[i] == doctest::Approx(m->data[i]));
    }

    auto a = make_tensor(2, 2, {1, 2, 3, 4});
    auto b = make_tensor(2, 1, {1, 1});
    auto c = tape.matmul(a, b);
    CHECK(c->at(0, 0) == doctest::Approx(3.0));
    CHECK(c->at(1, 0) == doctest::Approx(7.0));
}

TEST_CASE("matmul rejects dimension mismatch") {
    GradTape tape;
    auto a = make_tensor(2, 3);
    auto b = make_tensor(2, 2);
    CHECK_THROWS_AS(tape.matmul(a, b), std::invalid_argument);
}

TEST_CASE("matmul gradient matches finite differences") {
    std::mt19937_64 rng(11);
    auto a = random_tensor(rng, 3, 4);
    auto b = random_tensor(rng, 4, 2);
    const double err = fd::max_grad_rel_err(
        [&](GradTape& t) { return t.sum(t.matmul(a, b)); }, {a, b});
    CHECK(err < 1e-6);
}

TEST_CASE("l2_normalize_rows basics") {
    GradTape tape;
    auto v = make_tensor(1, 2, {3, 4});
    auto n = tape.l2_normalize_rows(v);
    CHECK(n->at(0, 0) == doctest::Approx(0.6));
    CHECK(n->at(0, 1) == doctest::Approx(0.8));

    auto unit = make_tensor(1, 2, {0.6, 0.8});
    auto n2 = tape.l2_normalize_rows(unit);
    CHECK(n2->at(0, 0) == doctest::Approx(0.6));
    CHECK(n2->at(0, 1) == doctest::Approx(0.8));

    auto zero = make_tensor(1, 3);
    CHECK_THROWS_AS(tape.l2_normalize_rows(zero), std::domain_error);
}

TEST_CASE("l2_normalize_rows gradient matches finite differences") {
    std::mt19937_64 rng(13);
    auto a = random_tensor(rng, 4, 3);
    for (double& v : a->data) {
        v += v >= 0 ? 0.5 : -0.5;  // keep rows away from zero norm
    }
    auto w = random_tensor(rng, 4, 3, false);
    const double err = fd::max_grad_rel_err(
        [&](GradTape& t) { return t.sum(t.mul(w, t.l2_normalize_rows(a))); },
        {a});
    CHECK(err < 1e-6);
}

TEST_CASE("softmax_rows values") {
    GradTape tape;
    auto a = make_tensor(3, 2, {0, 0, 1, 0, 5, 4});
    auto p = tape.softmax_rows(a);
    CHECK(p->at(0, 0) == doctest::Approx(0.5));
    CHECK(p->at(1, 0) == doctest::Approx(0.73106).epsilon(1e-4));
    CHECK(p->at(1, 1) == doctest::Approx(0.26894).epsilon(1e-4));
    // shift invariance
    CHECK(p->at(2, 0) == doctest::Approx(p->at(1, 0)));
    CHECK(p->at(2, 1) == doctest::Approx(p->at(1, 1)));
}

TEST_CASE("softmax_rows rows sum to one with positive entries") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        GradTape tape;
        auto a = random_tensor(rng, 5, 7, false);
        for (double& v : a->data) {
            v *= 20.0;
        }
        auto p = tape.softmax_rows(a);
        for (int i = 0; i < p->rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < p->cols; ++j) {
                CHECK(p->at(i, j) > 0.0);
                s += p->at(i, j);
            }
            CHECK(std::abs(s - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("softmax_rows gradient matches finite differences") {
    std::mt19937_64 rng(19);
    auto a = random_tensor(rng, 3, 5);
    auto w = random_tensor(rng, 3, 5, false);
    const double err = fd::max_grad_rel_err(
        [&](GradTape& t) { return t.sum(t.mul(w, t.softmax_rows(a))); }, {a});
    CHECK(err < 1e-6);
}

TEST_CASE("backward simple polynomial") {
    auto x = make_tensor(1, 1, {3.0}, true);
    GradTape tape;
    auto loss = tape.mul(x, x);
    tape.backward(loss);
    CHECK(x->grad[0] == doctest::Approx(6.0));
}

TEST_CASE("backward cross-entropy softmax identity") {
    auto s = make_tensor(1, 2, {0.0, 0.0}, true);
    GradTape tape;
    auto p = tape.softmax_rows(s);
    auto pick = make_tensor(1, 2, {1.0, 0.0});
    auto loss = tape.scale(tape.sum(tape.mul(pick, tape.log_clamped(p))), -1.0);
    tape.backward(loss);
    CHECK(s->grad[0] == doctest::Approx(-0.5));
    CHECK(s->grad[1] == doctest::Approx(0.5));
}

TEST_CASE("backward rejects non-scalar loss") {
    GradTape tape;
    auto a = make_tensor(2, 2, {1, 2, 3, 4}, true);
    auto b = tape.scale(a, 2.0);
    CHECK_THROWS_AS(tape.backward(b), std::invalid_argument);
}

TEST_CASE("elementwise and reduction ops match finite differences") {
    std::mt19937_64 rng(23);
    auto a = random_tensor(rng, 3, 3);
    auto b = random_tensor(rng, 3, 3);
    const double err = fd::max_grad_rel_err(
        [&](GradTape& t) {
            auto mixed = t.add(t.mul(a, b), t.scale(t.sub(a, b), 0.7));
            auto e = t.exp(t.scale(mixed, 0.3));
            return t.sum(t.row_sum(e));
        },
        {a, b});
    CHECK(err < 1e-6);
}

TEST_CASE("slice and transpose gradients") {
    std::mt19937_64 rng(29);
    auto a = random_tensor(rng, 5, 3);
    const double err = fd::max_grad_rel_err(
        [&](GradTape& t) {
            auto top = t.slice_rows(a, 0, 2);
            return t.sum(t.matmul(top, t.transpose(t.slice_rows(a, 2, 3))));
        },
        {a});
    CHECK(err < 1e-6);
}

TEST_CASE("backward through random graphs stays finite") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_tensor(rng, 4, 4);
        GradTape tape;
        auto p = tape.softmax_rows(tape.matmul(a, tape.transpose(a)));
        auto loss = tape.sum(tape.mul(p, tape.log_clamped(p)));
        tape.backward(loss);
        for (double g : a->grad) {
            CHECK(std::isfinite(g));
        }
    }
}
