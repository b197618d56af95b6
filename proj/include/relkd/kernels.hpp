#pragma once

#include <cstddef>

namespace relkd::kernels {

// out[n x m] = a[n x k] * b[k x m], row-major. The serial and OpenMP
// variants compute each output element as the same left-to-right dot
// product, so their results are bitwise identical.
void matmul_serial(const double* a, const double* b, double* out,
                   int n, int k, int m);
void matmul_omp(const double* a, const double* b, double* out,
                int n, int k, int m);

// Dispatches to the OpenMP kernel for large products, serial otherwise.
void matmul(const double* a, const double* b, double* out,
            int n, int k, int m);

}  // namespace relkd::kernels
