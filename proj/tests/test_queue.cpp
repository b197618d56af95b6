#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "relkd/queue.hpp"

using namespace relkd;

namespace {

std::vector<double> prob2(double a) { return {a, 1.0 - a}; }

}  // namespace

TEST_CASE("push and FIFO eviction") {
    MemoryQueue q(8);
    std::vector<int> labels(4, 0);
    std::vector<std::vector<double>> probs(4, prob2(0.5));
    q.push(labels, probs);
    CHECK(q.size() == 4);

    std::vector<int> more(6, 1);
    std::vector<std::vector<double>> more_p(6, prob2(0.25));
    q.push(more, more_p);
    CHECK(q.size() == 8);
    // first two of the original batch evicted
    CHECK(q.entries()[0].first == 0);
    CHECK(q.entries()[1].first == 0);
    CHECK(q.entries()[2].first == 1);
}

TEST_CASE("push rejects unnormalized rows") {
    MemoryQueue q(4);
    CHECK_THROWS_AS(q.push({0}, {{0.5, 0.4}}), std::invalid_argument);
}

TEST_CASE("pseudo label is the arithmetic mean of surviving entries") {
    MemoryQueue q(8);
    q.push({3, 3}, {prob2(0.8), prob2(0.6)});
    std::vector<double> mean;
    REQUIRE(q.pseudo_super_label(3, mean));
    CHECK(mean[0] == doctest::Approx(0.7));
    CHECK(mean[1] == doctest::Approx(0.3));

    q.push({5}, {prob2(0.1)});
    REQUIRE(q.pseudo_super_label(5, mean));
    CHECK(mean[0] == doctest::Approx(0.1));

    CHECK_FALSE(q.pseudo_super_label(9, mean));
}

TEST_CASE("queue matches a shadow FIFO over random push sequences") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(0.01, 0.99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t cap = 1 + rng() % 32;
        MemoryQueue q(cap);
        std::vector<std::pair<int, std::vector<double>>> shadow;
        const int pushes = 1 + static_cast<int>(rng() % 10);
        for (int b = 0; b < pushes; ++b) {
            const int n = 1 + static_cast<int>(rng() % 8);
            std::vector<int> labels(n);
            std::vector<std::vector<double>> probs(n);
            for (int i = 0; i < n; ++i) {
                labels[i] = static_cast<int>(rng() % 5);
                probs[i] = prob2(unif(rng));
                shadow.emplace_back(labels[i], probs[i]);
            }
            q.push(labels, probs);
            while (shadow.size() > cap) {
                shadow.erase(shadow.begin());
            }
            REQUIRE(q.size() == shadow.size());
            for (std::size_t i = 0; i < shadow.size(); ++i) {
                CHECK(q.entries()[i].first == shadow[i].first);
                CHECK(q.entries()[i].second == shadow[i].second);
            }
        }

        // per-class mean equals the exact mean over surviving shadow entries
        for (int label = 0; label < 5; ++label) {
            std::vector<double> expect(2, 0.0);
            int count = 0;
            for (const auto& [y, p] : shadow) {
                if (y == label) {
                    expect[0] += p[0];
                    expect[1] += p[1];
                    ++count;
                }
            }
            std::vector<double> got;
            const bool found = q.pseudo_super_label(label, got);
            CHECK(found == (count > 0));
            if (count > 0) {
                CHECK(std::abs(got[0] - expect[0] / count) < 1e-12);
                CHECK(std::abs(got[1] - expect[1] / count) < 1e-12);
            }
        }
    }
}
