#include "medoe/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "medoe/kernels.hpp"
#include "medoe/rng.hpp"

namespace medoe {
namespace {

std::vector<double> xavier(std::mt19937_64& rng, int fan_out, int fan_in) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-s, s);
    std::vector<double> w(static_cast<std::size_t>(fan_out) * fan_in);
    for (auto& v : w) v = dist(rng);
    return w;
}

std::vector<double> to_double(const SceneSample& s) {
    std::vector<double> x(s.features.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.features[i];
    return x;
}

} // namespace

std::pair<BackboneParams, std::vector<ExpertParams>> init_params(std::uint64_t seed,
                                                                 const ModelDims& dims) {
    BackboneParams bp;
    bp.D = dims.D;
    bp.F1 = dims.F1;
    {
        auto rng = make_stream(seed, 0);
        bp.W1 = xavier(rng, dims.F1, dims.D);
        bp.b1.assign(dims.F1, 0.0);
    }
    std::vector<ExpertParams> experts(dims.K);
    for (int i = 0; i < dims.K; ++i) {
        auto rng = make_stream(seed, 1 + static_cast<std::uint64_t>(i));
        ExpertParams& e = experts[i];
        e.F1 = dims.F1;
        e.F2 = dims.F2;
        e.c = dims.c;
        e.r = dims.r;
        e.Wc = xavier(rng, dims.F2, 2 * dims.F1);
        e.bc.assign(dims.F2, 0.0);
        e.Wh = xavier(rng, dims.c, dims.F2);
        e.bh.assign(dims.c, 0.0);
    }
    return {std::move(bp), std::move(experts)};
}

BackboneGrads zero_grads(const BackboneParams& p) {
    return {std::vector<double>(p.W1.size(), 0.0), std::vector<double>(p.b1.size(), 0.0)};
}

ExpertGrads zero_grads(const ExpertParams& p) {
    return {std::vector<double>(p.Wc.size(), 0.0), std::vector<double>(p.bc.size(), 0.0),
            std::vector<double>(p.Wh.size(), 0.0), std::vector<double>(p.bh.size(), 0.0)};
}

BackboneActivations backbone_forward(const BackboneParams& params, const SceneSample& sample) {
    if (sample.D != params.D)
        throw std::invalid_argument("backbone_forward: feature dimension mismatch");
    const int n = sample.pixels();
    const auto x = to_double(sample);
    BackboneActivations act;
    act.pre.resize(static_cast<std::size_t>(n) * params.F1);
    act.post.resize(act.pre.size());
    kernels::omp::affine(x.data(), n, params.D, params.W1.data(), params.b1.data(), params.F1,
                         /*relu=*/false, act.pre.data());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(act.pre.size()); ++i)
        act.post[i] = act.pre[i] > 0 ? act.pre[i] : 0.0;
    return act;
}

ExpertActivations context_head_forward(const ExpertParams& params,
                                       const BackboneActivations& backbone, int H, int W) {
    const int n = H * W;
    const int F1 = params.F1;
    if (backbone.post.size() != static_cast<std::size_t>(n) * F1)
        throw std::invalid_argument("context_head_forward: backbone width mismatch");
    ExpertActivations act;
    act.window.resize(backbone.post.size());
    kernels::omp::window_mean(backbone.post.data(), H, W, F1, params.r, act.window.data());

    act.concat.resize(static_cast<std::size_t>(n) * 2 * F1);
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n; ++p) {
        double* dst = act.concat.data() + static_cast<std::size_t>(p) * 2 * F1;
        const double* a = backbone.post.data() + static_cast<std::size_t>(p) * F1;
        const double* m = act.window.data() + static_cast<std::size_t>(p) * F1;
        for (int d = 0; d < F1; ++d) dst[d] = a[d];
        for (int d = 0; d < F1; ++d) dst[F1 + d] = m[d];
    }

    act.pre_ctx.resize(static_cast<std::size_t>(n) * params.F2);
    act.ctx.resize(act.pre_ctx.size());
    kernels::omp::affine(act.concat.data(), n, 2 * F1, params.Wc.data(), params.bc.data(),
                         params.F2, /*relu=*/false, act.pre_ctx.data());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(act.pre_ctx.size()); ++i)
        act.ctx[i] = act.pre_ctx[i] > 0 ? act.pre_ctx[i] : 0.0;

    act.logits = LogitGrid(n, params.c);
    kernels::omp::affine(act.ctx.data(), n, params.F2, params.Wh.data(), params.bh.data(),
                         params.c, /*relu=*/false, act.logits.data.data());
    return act;
}

LogitGrid expert_forward(const BackboneParams& backbone, const ExpertParams& expert,
                         const SceneSample& sample) {
    const auto bact = backbone_forward(backbone, sample);
    auto eact = context_head_forward(expert, bact, sample.H, sample.W);
    return std::move(eact.logits);
}

void expert_backward(const BackboneParams& bp, const ExpertParams& ep, const SceneSample& sample,
                     const BackboneActivations& bact, const ExpertActivations& eact,
                     const PixelMatrix& dlogits, ExpertGrads& egrads, BackboneGrads* bgrads) {
    const int n = sample.pixels();
    const int F1 = ep.F1, F2 = ep.F2, c = ep.c;

    // Head: dWh, dbh and dg.
    std::vector<double> dg(static_cast<std::size_t>(n) * F2, 0.0);
    for (int p = 0; p < n; ++p) {
        const double* dz = dlogits.row(p);
        const double* g = eact.ctx.data() + static_cast<std::size_t>(p) * F2;
        for (int i = 0; i < c; ++i) {
            if (dz[i] == 0.0) continue;
            double* wrow = egrads.Wh.data() + static_cast<std::size_t>(i) * F2;
            for (int j = 0; j < F2; ++j) wrow[j] += dz[i] * g[j];
            egrads.bh[i] += dz[i];
        }
    }
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n; ++p) {
        const double* dz = dlogits.row(p);
        double* dgp = dg.data() + static_cast<std::size_t>(p) * F2;
        for (int i = 0; i < c; ++i) {
            if (dz[i] == 0.0) continue;
            const double* wrow = ep.Wh.data() + static_cast<std::size_t>(i) * F2;
            for (int j = 0; j < F2; ++j) dgp[j] += dz[i] * wrow[j];
        }
    }

    // Context ReLU + affine: dv, dWc, dbc, ds.
    std::vector<double> dv(dg.size());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(dv.size()); ++i)
        dv[i] = eact.pre_ctx[i] > 0 ? dg[i] : 0.0;
    for (int p = 0; p < n; ++p) {
        const double* dvp = dv.data() + static_cast<std::size_t>(p) * F2;
        const double* s = eact.concat.data() + static_cast<std::size_t>(p) * 2 * F1;
        for (int i = 0; i < F2; ++i) {
            if (dvp[i] == 0.0) continue;
            double* wrow = egrads.Wc.data() + static_cast<std::size_t>(i) * 2 * F1;
            for (int j = 0; j < 2 * F1; ++j) wrow[j] += dvp[i] * s[j];
            egrads.bc[i] += dvp[i];
        }
    }

    if (!bgrads) return;

    // Through the concat: direct branch plus the window-mean adjoint.
    std::vector<double> da(static_cast<std::size_t>(n) * F1, 0.0);
    std::vector<double> dm(da.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n; ++p) {
        const double* dvp = dv.data() + static_cast<std::size_t>(p) * F2;
        double* dap = da.data() + static_cast<std::size_t>(p) * F1;
        double* dmp = dm.data() + static_cast<std::size_t>(p) * F1;
        for (int i = 0; i < F2; ++i) {
            if (dvp[i] == 0.0) continue;
            const double* wrow = ep.Wc.data() + static_cast<std::size_t>(i) * 2 * F1;
            for (int j = 0; j < F1; ++j) dap[j] += dvp[i] * wrow[j];
            for (int j = 0; j < F1; ++j) dmp[j] += dvp[i] * wrow[F1 + j];
        }
    }
    kernels::omp::window_mean_backward(dm.data(), sample.H, sample.W, F1, ep.r, da.data());

    // Backbone ReLU + affine.
    std::vector<double> du(da.size());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(du.size()); ++i)
        du[i] = bact.pre[i] > 0 ? da[i] : 0.0;
    for (int p = 0; p < n; ++p) {
        const double* dup = du.data() + static_cast<std::size_t>(p) * F1;
        const float* x = sample.feature_at(p);
        for (int i = 0; i < F1; ++i) {
            if (dup[i] == 0.0) continue;
            double* wrow = bgrads->W1.data() + static_cast<std::size_t>(i) * bp.D;
            for (int j = 0; j < bp.D; ++j) wrow[j] += dup[i] * x[j];
            bgrads->b1[i] += dup[i];
        }
    }
}

} // namespace medoe
