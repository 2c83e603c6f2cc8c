#pragma once

// Shared oracles for the test suites. Everything here is independent of the
// engine's computation path: plain nested loops and direct formula evaluation.

#include <cmath>
#include <cstdint>
#include <vector>

#include "ndram/ad/tensor.hpp"
#include "ndram/rng.hpp"

namespace testutil {

inline std::vector<double> random_vec(size_t n, ndram::Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Brute-force 3D convolution: seven nested loops, no bounds tricks.
// in [Cin,D,H,W], ker [Cout,Cin,k,k,k], bias [Cout]; zero padding.
inline std::vector<double> conv3d_loop(const std::vector<double>& in, int cin, int d, int h, int w,
                                       const std::vector<double>& ker, int cout, int k,
                                       const std::vector<double>& bias, int stride, int pad,
                                       int& od, int& oh, int& ow) {
    od = (d + 2 * pad - k) / stride + 1;
    oh = (h + 2 * pad - k) / stride + 1;
    ow = (w + 2 * pad - k) / stride + 1;
    std::vector<double> out(static_cast<size_t>(cout) * od * oh * ow, 0.0);
    for (int co = 0; co < cout; ++co)
        for (int zo = 0; zo < od; ++zo)
            for (int yo = 0; yo < oh; ++yo)
                for (int xo = 0; xo < ow; ++xo) {
                    double acc = bias[co];
                    for (int ci = 0; ci < cin; ++ci)
                        for (int kz = 0; kz < k; ++kz)
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx) {
                                    int zi = zo * stride - pad + kz;
                                    int yi = yo * stride - pad + ky;
                                    int xi = xo * stride - pad + kx;
                                    if (zi < 0 || zi >= d || yi < 0 || yi >= h || xi < 0 || xi >= w)
                                        continue;
                                    double iv = in[((static_cast<size_t>(ci) * d + zi) * h + yi) * w + xi];
                                    double kv = ker[(((static_cast<size_t>(co) * cin + ci) * k + kz) * k + ky) * k + kx];
                                    acc += iv * kv;
                                }
                    out[((static_cast<size_t>(co) * od + zo) * oh + yo) * ow + xo] = acc;
                }
    return out;
}

// Brute-force window max pooling over [C,D,H,W].
inline std::vector<double> maxpool3d_loop(const std::vector<double>& in, int c, int d, int h, int w,
                                          int win) {
    int od = d / win, oh = h / win, ow = w / win;
    std::vector<double> out(static_cast<size_t>(c) * od * oh * ow);
    size_t oi = 0;
    for (int ci = 0; ci < c; ++ci)
        for (int zo = 0; zo < od; ++zo)
            for (int yo = 0; yo < oh; ++yo)
                for (int xo = 0; xo < ow; ++xo) {
                    double best = -1e300;
                    for (int kz = 0; kz < win; ++kz)
                        for (int ky = 0; ky < win; ++ky)
                            for (int kx = 0; kx < win; ++kx) {
                                double v = in[((static_cast<size_t>(ci) * d + zo * win + kz) * h +
                                               yo * win + ky) * w + xo * win + kx];
                                if (v > best) best = v;
                            }
                    out[oi++] = best;
                }
    return out;
}

// Direct gate-equation LSTM step for a single row. Weights stacked [i,f,g,o].
struct LstmOracleOut {
    std::vector<double> h;
    std::vector<double> c;
};

inline LstmOracleOut lstm_cell_loop(const std::vector<double>& x, const std::vector<double>& h,
                                    const std::vector<double>& c, const std::vector<double>& w_ih,
                                    const std::vector<double>& w_hh, const std::vector<double>& b,
                                    int n_in, int n_h) {
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    std::vector<double> z(4 * n_h);
    for (int j = 0; j < 4 * n_h; ++j) {
        double s = b[j];
        for (int k = 0; k < n_in; ++k) s += w_ih[static_cast<size_t>(j) * n_in + k] * x[k];
        for (int k = 0; k < n_h; ++k) s += w_hh[static_cast<size_t>(j) * n_h + k] * h[k];
        z[j] = s;
    }
    LstmOracleOut out;
    out.h.resize(n_h);
    out.c.resize(n_h);
    for (int k = 0; k < n_h; ++k) {
        double ig = sig(z[k]);
        double fg = sig(z[n_h + k]);
        double cand = std::tanh(z[2 * n_h + k]);
        double og = sig(z[3 * n_h + k]);
        out.c[k] = fg * c[k] + ig * cand;
        out.h[k] = og * std::tanh(out.c[k]);
    }
    return out;
}

// y = W x + b by explicit loops
inline std::vector<double> linear_loop(const std::vector<double>& x, const std::vector<double>& w,
                                       const std::vector<double>& b, int m, int n) {
    std::vector<double> y(m);
    for (int j = 0; j < m; ++j) {
        double s = b[j];
        for (int k = 0; k < n; ++k) s += w[static_cast<size_t>(j) * n + k] * x[k];
        y[j] = s;
    }
    return y;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-12});
        m = std::max(m, std::abs(a[i] - b[i]) / denom);
    }
    return m;
}

inline ndram::ad::Tensor random_tensor(ndram::ad::Shape shape, ndram::Rng& rng,
                                       bool requires_grad = false, double lo = -1.0, double hi = 1.0) {
    auto n = ndram::ad::shape_numel(shape);
    return ndram::ad::Tensor::from_data(std::move(shape), random_vec(static_cast<size_t>(n), rng, lo, hi),
                                        requires_grad);
}

}  // namespace testutil
