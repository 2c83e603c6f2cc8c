#include <cmath>
#include <memory>
#include <stdexcept>

#include "ndram/ad/ops.hpp"

namespace ndram::ad {

Tensor batchnorm3d(Graph& g, const Tensor& input, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, BnMode mode) {
    if (input.rank() != 5)
        throw std::invalid_argument("batchnorm3d: input must be [B,C,D,H,W], got " +
                                    shape_str(input.shape()));
    const Shape& is = input.shape();
    int batch = is[0], chans = is[1], d = is[2], h = is[3], w = is[4];
    if (mode == BnMode::Train && batch < 2)
        throw std::invalid_argument("batchnorm3d: train mode requires batch size >= 2, got " +
                                    std::to_string(batch));
    if (gamma.rank() != 1 || gamma.shape()[0] != chans || beta.rank() != 1 || beta.shape()[0] != chans)
        throw std::invalid_argument("batchnorm3d: gamma/beta must be [" + std::to_string(chans) + "]");
    if (static_cast<int>(state.running_mean.size()) != chans)
        throw std::invalid_argument("batchnorm3d: state tracks " +
                                    std::to_string(state.running_mean.size()) + " channels, input has " +
                                    std::to_string(chans));

    const int64_t spatial = static_cast<int64_t>(d) * h * w;
    const int64_t chan_stride = spatial;
    const int64_t batch_stride = static_cast<int64_t>(chans) * spatial;
    const int64_t n_per_chan = static_cast<int64_t>(batch) * spatial;
    const double eps = state.eps;

    bool act = g.recording() && (input.active() || gamma.active() || beta.active());
    Tensor out = make_op_output(is, act);

    const double* IN = input.values().data();
    const double* GA = gamma.values().data();
    const double* BE = beta.values().data();
    double* OUT = out.impl()->value.data();

    auto mean = std::make_shared<std::vector<double>>(chans);
    auto var = std::make_shared<std::vector<double>>(chans);

    if (mode == BnMode::Train) {
        for (int c = 0; c < chans; ++c) {
            double m = 0.0;
            for (int b = 0; b < batch; ++b) {
                const double* p = IN + b * batch_stride + c * chan_stride;
                for (int64_t i = 0; i < spatial; ++i) m += p[i];
            }
            m /= static_cast<double>(n_per_chan);
            double v = 0.0;
            for (int b = 0; b < batch; ++b) {
                const double* p = IN + b * batch_stride + c * chan_stride;
                for (int64_t i = 0; i < spatial; ++i) {
                    double dlt = p[i] - m;
                    v += dlt * dlt;
                }
            }
            v /= static_cast<double>(n_per_chan);
            (*mean)[c] = m;
            (*var)[c] = v;
            state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * m;
            state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * v;
        }
    } else {
        *mean = state.running_mean;
        *var = state.running_var;
    }

    for (int b = 0; b < batch; ++b)
        for (int c = 0; c < chans; ++c) {
            const double* p = IN + b * batch_stride + c * chan_stride;
            double* q = OUT + b * batch_stride + c * chan_stride;
            double inv = 1.0 / std::sqrt((*var)[c] + eps);
            double m = (*mean)[c], ga = GA[c], be = BE[c];
            for (int64_t i = 0; i < spatial; ++i) q[i] = ga * (p[i] - m) * inv + be;
        }

    if (act) {
        auto ii = input.impl(), gi = gamma.impl(), bi = beta.impl(), oi = out.impl();
        bool train = mode == BnMode::Train;
        g.record({ii, gi, bi}, {oi},
                 [ii, gi, bi, oi, mean, var, eps, batch, chans, spatial, batch_stride, chan_stride,
                  n_per_chan, train] {
            for (int c = 0; c < chans; ++c) {
                double m = (*mean)[c];
                double inv = 1.0 / std::sqrt((*var)[c] + eps);
                double ga = gi->value[c];

                // reductions over the channel
                double sum_gy = 0.0, sum_gy_xhat = 0.0;
                for (int b = 0; b < batch; ++b) {
                    const double* go = oi->grad.data() + b * batch_stride + c * chan_stride;
                    const double* x = ii->value.data() + b * batch_stride + c * chan_stride;
                    for (int64_t i = 0; i < spatial; ++i) {
                        sum_gy += go[i];
                        sum_gy_xhat += go[i] * (x[i] - m) * inv;
                    }
                }
                if (gi->active) gi->grad[c] += sum_gy_xhat;
                if (bi->active) bi->grad[c] += sum_gy;
                if (!ii->active) continue;

                if (train) {
                    double nmean_gy = sum_gy / static_cast<double>(n_per_chan);
                    double nmean_gy_xhat = sum_gy_xhat / static_cast<double>(n_per_chan);
                    for (int b = 0; b < batch; ++b) {
                        const double* go = oi->grad.data() + b * batch_stride + c * chan_stride;
                        const double* x = ii->value.data() + b * batch_stride + c * chan_stride;
                        double* gx = ii->grad.data() + b * batch_stride + c * chan_stride;
                        for (int64_t i = 0; i < spatial; ++i) {
                            double xhat = (x[i] - m) * inv;
                            gx[i] += ga * inv * (go[i] - nmean_gy - xhat * nmean_gy_xhat);
                        }
                    }
                } else {
                    double scl = ga * inv;
                    for (int b = 0; b < batch; ++b) {
                        const double* go = oi->grad.data() + b * batch_stride + c * chan_stride;
                        double* gx = ii->grad.data() + b * batch_stride + c * chan_stride;
                        for (int64_t i = 0; i < spatial; ++i) gx[i] += scl * go[i];
                    }
                }
            }
        });
    }
    return out;
}

namespace {

inline double sigm(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

std::pair<Tensor, Tensor> lstm_cell(Graph& g, const Tensor& x, const Tensor& h, const Tensor& c,
                                    const LstmWeights& w) {
    const bool batched = x.rank() == 2;
    if (x.rank() != 1 && x.rank() != 2)
        throw std::invalid_argument("lstm_cell: x must be rank-1 or rank-2, got " +
                                    shape_str(x.shape()));
    if (h.rank() != x.rank() || c.rank() != x.rank())
        throw std::invalid_argument("lstm_cell: x/h/c rank mismatch");

    const int rows = batched ? x.shape()[0] : 1;
    const int n_in = batched ? x.shape()[1] : x.shape()[0];
    const int n_h = batched ? h.shape()[1] : h.shape()[0];
    if (batched && (h.shape()[0] != rows || c.shape()[0] != rows))
        throw std::invalid_argument("lstm_cell: batch size mismatch between x/h/c");
    if ((batched ? c.shape()[1] : c.shape()[0]) != n_h)
        throw std::invalid_argument("lstm_cell: h/c width mismatch");
    if (w.w_ih.rank() != 2 || w.w_ih.shape()[0] != 4 * n_h || w.w_ih.shape()[1] != n_in)
        throw std::invalid_argument("lstm_cell: w_ih must be [4H,n_in]=[" + std::to_string(4 * n_h) +
                                    "," + std::to_string(n_in) + "], got " + shape_str(w.w_ih.shape()));
    if (w.w_hh.rank() != 2 || w.w_hh.shape()[0] != 4 * n_h || w.w_hh.shape()[1] != n_h)
        throw std::invalid_argument("lstm_cell: w_hh must be [4H,H], got " + shape_str(w.w_hh.shape()));
    if (w.bias.rank() != 1 || w.bias.shape()[0] != 4 * n_h)
        throw std::invalid_argument("lstm_cell: bias must be [4H], got " + shape_str(w.bias.shape()));

    bool act = g.recording() &&
               (x.active() || h.active() || c.active() || w.w_ih.active() || w.w_hh.active() ||
                w.bias.active());
    Shape out_shape = batched ? Shape{rows, n_h} : Shape{n_h};
    Tensor h_out = make_op_output(out_shape, act);
    Tensor c_out = make_op_output(out_shape, act);

    // saved activations per row: i, f, g, o, tanh(c')
    auto gates = std::make_shared<std::vector<double>>(static_cast<size_t>(rows) * 4 * n_h);
    auto tanh_c = std::make_shared<std::vector<double>>(static_cast<size_t>(rows) * n_h);

    const double* X = x.values().data();
    const double* H = h.values().data();
    const double* C = c.values().data();
    const double* WI = w.w_ih.values().data();
    const double* WH = w.w_hh.values().data();
    const double* B = w.bias.values().data();
    double* HO = h_out.impl()->value.data();
    double* CO = c_out.impl()->value.data();

    std::vector<double> z(static_cast<size_t>(4) * n_h);
    for (int r = 0; r < rows; ++r) {
        const double* xr = X + static_cast<size_t>(r) * n_in;
        const double* hr = H + static_cast<size_t>(r) * n_h;
        const double* cr = C + static_cast<size_t>(r) * n_h;
        for (int j = 0; j < 4 * n_h; ++j) {
            const double* wi = WI + static_cast<size_t>(j) * n_in;
            const double* wh = WH + static_cast<size_t>(j) * n_h;
            double s = B[j];
            for (int k = 0; k < n_in; ++k) s += wi[k] * xr[k];
            for (int k = 0; k < n_h; ++k) s += wh[k] * hr[k];
            z[j] = s;
        }
        double* gr = gates->data() + static_cast<size_t>(r) * 4 * n_h;
        double* tr = tanh_c->data() + static_cast<size_t>(r) * n_h;
        for (int k = 0; k < n_h; ++k) {
            double ig = sigm(z[k]);
            double fg = sigm(z[n_h + k]);
            double cand = std::tanh(z[2 * n_h + k]);
            double og = sigm(z[3 * n_h + k]);
            double cn = fg * cr[k] + ig * cand;
            double tc = std::tanh(cn);
            gr[k] = ig;
            gr[n_h + k] = fg;
            gr[2 * n_h + k] = cand;
            gr[3 * n_h + k] = og;
            tr[k] = tc;
            CO[static_cast<size_t>(r) * n_h + k] = cn;
            HO[static_cast<size_t>(r) * n_h + k] = og * tc;
        }
    }

    if (act) {
        auto xi = x.impl(), hi = h.impl(), ci = c.impl();
        auto wii = w.w_ih.impl(), whi = w.w_hh.impl(), bi = w.bias.impl();
        auto hoi = h_out.impl(), coi = c_out.impl();
        g.record({xi, hi, ci, wii, whi, bi}, {hoi, coi},
                 [xi, hi, ci, wii, whi, bi, hoi, coi, gates, tanh_c, rows, n_in, n_h] {
            std::vector<double> dz(static_cast<size_t>(4) * n_h);
            for (int r = 0; r < rows; ++r) {
                const double* gr = gates->data() + static_cast<size_t>(r) * 4 * n_h;
                const double* tr = tanh_c->data() + static_cast<size_t>(r) * n_h;
                const double* dho = hoi->grad.data() + static_cast<size_t>(r) * n_h;
                const double* dco = coi->grad.data() + static_cast<size_t>(r) * n_h;
                const double* cr = ci->value.data() + static_cast<size_t>(r) * n_h;

                for (int k = 0; k < n_h; ++k) {
                    double ig = gr[k], fg = gr[n_h + k], cand = gr[2 * n_h + k], og = gr[3 * n_h + k];
                    double tc = tr[k];
                    double dc_total = dco[k] + dho[k] * og * (1.0 - tc * tc);
                    dz[k] = dc_total * cand * ig * (1.0 - ig);
                    dz[n_h + k] = dc_total * cr[k] * fg * (1.0 - fg);
                    dz[2 * n_h + k] = dc_total * ig * (1.0 - cand * cand);
                    dz[3 * n_h + k] = dho[k] * tc * og * (1.0 - og);
                    if (ci->active) ci->grad[static_cast<size_t>(r) * n_h + k] += dc_total * fg;
                }

                const double* xr = xi->value.data() + static_cast<size_t>(r) * n_in;
                const double* hr = hi->value.data() + static_cast<size_t>(r) * n_h;
                for (int j = 0; j < 4 * n_h; ++j) {
                    double dj = dz[j];
                    if (dj == 0.0) continue;
                    if (xi->active) {
                        double* gx = xi->grad.data() + static_cast<size_t>(r) * n_in;
                        const double* wi = wii->value.data() + static_cast<size_t>(j) * n_in;
                        for (int k = 0; k < n_in; ++k) gx[k] += dj * wi[k];
                    }
                    if (hi->active) {
                        double* gh = hi->grad.data() + static_cast<size_t>(r) * n_h;
                        const double* wh = whi->value.data() + static_cast<size_t>(j) * n_h;
                        for (int k = 0; k < n_h; ++k) gh[k] += dj * wh[k];
                    }
                    if (wii->active) {
                        double* gw = wii->grad.data() + static_cast<size_t>(j) * n_in;
                        for (int k = 0; k < n_in; ++k) gw[k] += dj * xr[k];
                    }
                    if (whi->active) {
                        double* gw = whi->grad.data() + static_cast<size_t>(j) * n_h;
                        for (int k = 0; k < n_h; ++k) gw[k] += dj * hr[k];
                    }
                    if (bi->active) bi->grad[j] += dj;
                }
            }
        });
    }
    return {h_out, c_out};
}

}  // namespace ndram::ad
