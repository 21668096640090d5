// Compares the serial reference kernels against the OpenMP versions and
// verifies both produce bit-identical results while timing them.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "medoe/kernels.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        auto t0 = Clock::now();
        fn();
        best = std::min(best, ms_since(t0));
    }
    return best;
}

} // namespace

int main() {
    const int H = 256, W = 256, F = 16, r = 2;
    const int n = H * W, da = 32, db = 16;
    const int reps = 5;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0.0, 1.0);

    std::vector<double> grid(static_cast<std::size_t>(H) * W * F);
    for (auto& v : grid) v = nd(rng);
    std::vector<double> out_s(grid.size()), out_p(grid.size());

    std::vector<double> x(static_cast<std::size_t>(n) * da), wts(static_cast<std::size_t>(db) * da),
        bias(db);
    for (auto& v : x) v = nd(rng);
    for (auto& v : wts) v = nd(rng);
    for (auto& v : bias) v = nd(rng);
    std::vector<double> y_s(static_cast<std::size_t>(n) * db), y_p(y_s.size());

    std::printf("grid %dx%dx%d, window radius %d, affine %d x (%d -> %d), best of %d\n\n", H, W, F,
                r, n, da, db, reps);
    std::printf("%-24s %12s %12s %10s %10s\n", "kernel", "serial ms", "omp ms", "speedup",
                "identical");

    using namespace medoe::kernels;

    double ts = time_best_of(reps, [&] { serial::window_mean(grid.data(), H, W, F, r, out_s.data()); });
    double tp = time_best_of(reps, [&] { omp::window_mean(grid.data(), H, W, F, r, out_p.data()); });
    std::printf("%-24s %12.2f %12.2f %9.2fx %10s\n", "window_mean", ts, tp, ts / tp,
                out_s == out_p ? "yes" : "NO");

    std::fill(out_s.begin(), out_s.end(), 0.0);
    std::fill(out_p.begin(), out_p.end(), 0.0);
    ts = time_best_of(reps, [&] {
        std::fill(out_s.begin(), out_s.end(), 0.0);
        serial::window_mean_backward(grid.data(), H, W, F, r, out_s.data());
    });
    tp = time_best_of(reps, [&] {
        std::fill(out_p.begin(), out_p.end(), 0.0);
        omp::window_mean_backward(grid.data(), H, W, F, r, out_p.data());
    });
    std::printf("%-24s %12.2f %12.2f %9.2fx %10s\n", "window_mean_backward", ts, tp, ts / tp,
                out_s == out_p ? "yes" : "NO");

    ts = time_best_of(reps, [&] { serial::affine(x.data(), n, da, wts.data(), bias.data(), db, true, y_s.data()); });
    tp = time_best_of(reps, [&] { omp::affine(x.data(), n, da, wts.data(), bias.data(), db, true, y_p.data()); });
    std::printf("%-24s %12.2f %12.2f %9.2fx %10s\n", "affine+relu", ts, tp, ts / tp,
                y_s == y_p ? "yes" : "NO");

    return (out_s == out_p && y_s == y_p) ? 0 : 1;
}
