#pragma once

#include <cstddef>

// Hot per-pixel kernels. Each exists in a straightforward serial form and an
// OpenMP form; both perform identical per-output arithmetic, so results are
// bit-identical and the serial versions double as test references.

namespace medoe::kernels {

// out[p] = W * in[p] + b, optionally ReLU-clamped.
// in: n x a (row-major), W: b_dim x a, b: b_dim, out: n x b_dim.
namespace serial {
void affine(const double* in, int n, int a, const double* W, const double* b, int b_dim,
            bool relu, double* out);
// Mean over the (2r+1)^2 window with clamp-to-edge padding, per channel.
// in/out: H*W*F pixel-major.
void window_mean(const double* in, int H, int W, int F, int r, double* out);
// Adjoint of window_mean: scatters each pixel's gradient back over its
// clamped window.
void window_mean_backward(const double* dout, int H, int W, int F, int r, double* din);
} // namespace serial

namespace omp {
void affine(const double* in, int n, int a, const double* W, const double* b, int b_dim,
            bool relu, double* out);
void window_mean(const double* in, int H, int W, int F, int r, double* out);
void window_mean_backward(const double* dout, int H, int W, int F, int r, double* din);
} // namespace omp

} // namespace medoe::kernels
