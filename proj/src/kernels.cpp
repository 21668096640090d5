#include "medoe/kernels.hpp"

#include <algorithm>

namespace medoe::kernels {

namespace {

inline void affine_row(const double* x, int a, const double* W, const double* b, int b_dim,
                       bool relu, double* y) {
    for (int i = 0; i < b_dim; ++i) {
        const double* w = W + static_cast<std::size_t>(i) * a;
        double acc = b[i];
        for (int j = 0; j < a; ++j) acc += w[j] * x[j];
        y[i] = relu ? std::max(acc, 0.0) : acc;
    }
}

inline void window_mean_pixel(const double* in, int H, int W, int F, int r, int y, int x,
                              double* out) {
    const int side = 2 * r + 1;
    const double inv = 1.0 / (side * side);
    for (int d = 0; d < F; ++d) out[d] = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        const int cy = std::clamp(y + dy, 0, H - 1);
        for (int dx = -r; dx <= r; ++dx) {
            const int cx = std::clamp(x + dx, 0, W - 1);
            const double* src = in + (static_cast<std::size_t>(cy) * W + cx) * F;
            for (int d = 0; d < F; ++d) out[d] += src[d];
        }
    }
    for (int d = 0; d < F; ++d) out[d] *= inv;
}

// One channel of the adjoint; per-channel scatters are independent, which is
// what makes the OpenMP variant race-free and bit-identical to serial.
inline void window_mean_backward_channel(const double* dout, int H, int W, int F, int r, int d,
                                         double* din) {
    const int side = 2 * r + 1;
    const double inv = 1.0 / (side * side);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double g = dout[(static_cast<std::size_t>(y) * W + x) * F + d] * inv;
            for (int dy = -r; dy <= r; ++dy) {
                const int cy = std::clamp(y + dy, 0, H - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const int cx = std::clamp(x + dx, 0, W - 1);
                    din[(static_cast<std::size_t>(cy) * W + cx) * F + d] += g;
                }
            }
        }
}

} // namespace

namespace serial {

void affine(const double* in, int n, int a, const double* W, const double* b, int b_dim,
            bool relu, double* out) {
    for (int p = 0; p < n; ++p)
        affine_row(in + static_cast<std::size_t>(p) * a, a, W, b, b_dim, relu,
                   out + static_cast<std::size_t>(p) * b_dim);
}

void window_mean(const double* in, int H, int W, int F, int r, double* out) {
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            window_mean_pixel(in, H, W, F, r, y, x,
                              out + (static_cast<std::size_t>(y) * W + x) * F);
}

void window_mean_backward(const double* dout, int H, int W, int F, int r, double* din) {
    for (int d = 0; d < F; ++d) window_mean_backward_channel(dout, H, W, F, r, d, din);
}

} // namespace serial

namespace omp {

void affine(const double* in, int n, int a, const double* W, const double* b, int b_dim,
            bool relu, double* out) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n; ++p)
        affine_row(in + static_cast<std::size_t>(p) * a, a, W, b, b_dim, relu,
                   out + static_cast<std::size_t>(p) * b_dim);
}

void window_mean(const double* in, int H, int W, int F, int r, double* out) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            window_mean_pixel(in, H, W, F, r, y, x,
                              out + (static_cast<std::size_t>(y) * W + x) * F);
}

void window_mean_backward(const double* dout, int H, int W, int F, int r, double* din) {
#pragma omp parallel for schedule(static)
    for (int d = 0; d < F; ++d) window_mean_backward_channel(dout, H, W, F, r, d, din);
}

} // namespace omp

} // namespace medoe::kernels
