// Compiled with -mavx2 only. FMA is deliberately not enabled so that every
// lane performs the same rounded multiply-then-add as the scalar reference.

#include "cbsim/kernels.hpp"

#include <immintrin.h>

namespace cbsim::kernels::avx2 {

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, prod);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void welford(const double* x, double* mean, double* m2, double count, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(count);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vm = _mm256_loadu_pd(mean + i);
        const __m256d delta = _mm256_sub_pd(vx, vm);
        const __m256d nm = _mm256_add_pd(vm, _mm256_div_pd(delta, vc));
        _mm256_storeu_pd(mean + i, nm);
        const __m256d inc = _mm256_mul_pd(delta, _mm256_sub_pd(vx, nm));
        _mm256_storeu_pd(m2 + i, _mm256_add_pd(_mm256_loadu_pd(m2 + i), inc));
    }
    for (; i < n; ++i) {
        const double delta = x[i] - mean[i];
        mean[i] += delta / count;
        m2[i] += delta * (x[i] - mean[i]);
    }
}

}  // namespace cbsim::kernels::avx2
