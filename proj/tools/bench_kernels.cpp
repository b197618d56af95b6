// Compares the serial and OpenMP matmul kernels on square matrices and
// checks that their outputs are bitwise identical.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

#include "relkd/kernels.hpp"

namespace {

double time_ms(void (*fn)(const double*, const double*, double*, int, int, int),
               const double* a, const double* b, double* out, int n, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) {
        fn(a, b, out, n, n, n);
    }
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    std::printf("%8s %12s %12s %8s %s\n", "n", "serial(ms)", "omp(ms)",
                "speedup", "bitwise");
    for (int n : {64, 128, 256, 512, 1024}) {
        std::vector<double> a(static_cast<std::size_t>(n) * n);
        std::vector<double> b(a.size()), out_s(a.size()), out_p(a.size());
        for (auto& v : a) v = unif(rng);
        for (auto& v : b) v = unif(rng);

        const int reps = n <= 256 ? 10 : 3;
        const double ts = time_ms(relkd::kernels::matmul_serial, a.data(),
                                  b.data(), out_s.data(), n, reps);
        const double tp = time_ms(relkd::kernels::matmul_omp, a.data(),
                                  b.data(), out_p.data(), n, reps);
        const bool same =
            std::memcmp(out_s.data(), out_p.data(),
                        out_s.size() * sizeof(double)) == 0;
        std::printf("%8d %12.3f %12.3f %8.2fx %s\n", n, ts, tp, ts / tp,
                    same ? "yes" : "NO");
        if (!same) {
            return 1;
        }
    }
    return 0;
}
