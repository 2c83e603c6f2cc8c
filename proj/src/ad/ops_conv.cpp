#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "ndram/ad/ops.hpp"

namespace ndram::ad {

namespace {

struct ConvDims {
    int batch;      // 1 when input is rank-4
    bool batched;
    int cin, d, h, w;
    int cout, k;
    int od, oh, ow;
};

ConvDims conv_dims(const Tensor& input, const Tensor& kernels, int stride, int padding) {
    if (input.rank() != 4 && input.rank() != 5)
        throw std::invalid_argument("conv3d: input must be [C,D,H,W] or [B,C,D,H,W], got " +
                                    shape_str(input.shape()));
    if (kernels.rank() != 5)
        throw std::invalid_argument("conv3d: kernels must be [Cout,Cin,k,k,k], got " +
                                    shape_str(kernels.shape()));
    if (stride < 1) throw std::invalid_argument("conv3d: stride must be >= 1");
    if (padding < 0) throw std::invalid_argument("conv3d: padding must be >= 0");

    ConvDims cd{};
    cd.batched = input.rank() == 5;
    const Shape& is = input.shape();
    int off = cd.batched ? 1 : 0;
    cd.batch = cd.batched ? is[0] : 1;
    cd.cin = is[off + 0];
    cd.d = is[off + 1];
    cd.h = is[off + 2];
    cd.w = is[off + 3];

    const Shape& ks = kernels.shape();
    cd.cout = ks[0];
    cd.k = ks[2];
    if (ks[1] != cd.cin)
        throw std::invalid_argument("conv3d: input has " + std::to_string(cd.cin) +
                                    " channels but kernels expect " + std::to_string(ks[1]));
    if (ks[3] != cd.k || ks[4] != cd.k)
        throw std::invalid_argument("conv3d: kernels must be cubic, got " + shape_str(ks));
    if (cd.k > cd.d + 2 * padding || cd.k > cd.h + 2 * padding || cd.k > cd.w + 2 * padding)
        throw std::invalid_argument("conv3d: kernel size " + std::to_string(cd.k) +
                                    " exceeds padded input " + shape_str(is));

    cd.od = (cd.d + 2 * padding - cd.k) / stride + 1;
    cd.oh = (cd.h + 2 * padding - cd.k) / stride + 1;
    cd.ow = (cd.w + 2 * padding - cd.k) / stride + 1;
    return cd;
}

// valid output range [lo,hi) along one axis for a given kernel offset
inline void axis_bounds(int in_dim, int out_dim, int stride, int padding, int koff,
                        int& lo, int& hi) {
    // need 0 <= o*stride - padding + koff <= in_dim-1
    int num = padding - koff;
    lo = num <= 0 ? 0 : (num + stride - 1) / stride;
    int top = in_dim - 1 - koff + padding;
    hi = top < 0 ? 0 : std::min(out_dim, top / stride + 1);
    if (lo > hi) lo = hi;
}

}  // namespace

Tensor conv3d(Graph& g, const Tensor& input, const Tensor& kernels, const Tensor& bias,
              int stride, int padding) {
    ConvDims cd = conv_dims(input, kernels, stride, padding);
    if (bias.rank() != 1 || bias.shape()[0] != cd.cout)
        throw std::invalid_argument("conv3d: bias must be [" + std::to_string(cd.cout) + "], got " +
                                    shape_str(bias.shape()));

    bool act = g.recording() && (input.active() || kernels.active() || bias.active());
    Shape out_shape = cd.batched ? Shape{cd.batch, cd.cout, cd.od, cd.oh, cd.ow}
                                 : Shape{cd.cout, cd.od, cd.oh, cd.ow};
    Tensor out = make_op_output(std::move(out_shape), act);

    const int64_t in_chan = static_cast<int64_t>(cd.d) * cd.h * cd.w;
    const int64_t out_chan = static_cast<int64_t>(cd.od) * cd.oh * cd.ow;
    const double* IN = input.values().data();
    const double* KER = kernels.values().data();
    const double* B = bias.values().data();
    double* OUT = out.impl()->value.data();

    for (int b = 0; b < cd.batch; ++b) {
        for (int co = 0; co < cd.cout; ++co) {
            double* oc = OUT + (static_cast<int64_t>(b) * cd.cout + co) * out_chan;
            std::fill(oc, oc + out_chan, B[co]);
            for (int ci = 0; ci < cd.cin; ++ci) {
                const double* in_c = IN + (static_cast<int64_t>(b) * cd.cin + ci) * in_chan;
                const double* ker_c =
                    KER + ((static_cast<int64_t>(co) * cd.cin + ci) * cd.k) * cd.k * cd.k;
                for (int kd = 0; kd < cd.k; ++kd) {
                    int od_lo, od_hi;
                    axis_bounds(cd.d, cd.od, stride, padding, kd, od_lo, od_hi);
                    for (int kh = 0; kh < cd.k; ++kh) {
                        int oh_lo, oh_hi;
                        axis_bounds(cd.h, cd.oh, stride, padding, kh, oh_lo, oh_hi);
                        for (int kw = 0; kw < cd.k; ++kw) {
                            int ow_lo, ow_hi;
                            axis_bounds(cd.w, cd.ow, stride, padding, kw, ow_lo, ow_hi);
                            double wv = ker_c[(static_cast<int64_t>(kd) * cd.k + kh) * cd.k + kw];
                            if (wv == 0.0) continue;
                            for (int od = od_lo; od < od_hi; ++od) {
                                int id = od * stride - padding + kd;
                                for (int oh = oh_lo; oh < oh_hi; ++oh) {
                                    int ih = oh * stride - padding + kh;
                                    const double* in_row =
                                        in_c + (static_cast<int64_t>(id) * cd.h + ih) * cd.w;
                                    double* out_row =
                                        oc + (static_cast<int64_t>(od) * cd.oh + oh) * cd.ow;
                                    int iw0 = ow_lo * stride - padding + kw;
                                    for (int ow = ow_lo; ow < ow_hi; ++ow)
                                        out_row[ow] += wv * in_row[iw0 + (ow - ow_lo) * stride];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    if (act) {
        auto ii = input.impl(), ki = kernels.impl(), bi = bias.impl(), oi = out.impl();
        g.record({ii, ki, bi}, {oi}, [ii, ki, bi, oi, cd, stride, padding] {
            const int64_t in_chan = static_cast<int64_t>(cd.d) * cd.h * cd.w;
            const int64_t out_chan = static_cast<int64_t>(cd.od) * cd.oh * cd.ow;
            const double* GO = oi->grad.data();

            if (bi->active) {
                for (int b = 0; b < cd.batch; ++b)
                    for (int co = 0; co < cd.cout; ++co) {
                        const double* go = GO + (static_cast<int64_t>(b) * cd.cout + co) * out_chan;
                        double s = 0.0;
                        for (int64_t i = 0; i < out_chan; ++i) s += go[i];
                        bi->grad[co] += s;
                    }
            }

            if (!ii->active && !ki->active) return;
            for (int b = 0; b < cd.batch; ++b) {
                for (int co = 0; co < cd.cout; ++co) {
                    const double* go = GO + (static_cast<int64_t>(b) * cd.cout + co) * out_chan;
                    for (int ci = 0; ci < cd.cin; ++ci) {
                        const double* in_c = ii->value.data() +
                                             (static_cast<int64_t>(b) * cd.cin + ci) * in_chan;
                        double* gin_c = ii->active
                                            ? ii->grad.data() +
                                                  (static_cast<int64_t>(b) * cd.cin + ci) * in_chan
                                            : nullptr;
                        int64_t kbase = (static_cast<int64_t>(co) * cd.cin + ci) *
                                        static_cast<int64_t>(cd.k) * cd.k * cd.k;
                        for (int kd = 0; kd < cd.k; ++kd) {
                            int od_lo, od_hi;
                            axis_bounds(cd.d, cd.od, stride, padding, kd, od_lo, od_hi);
                            for (int kh = 0; kh < cd.k; ++kh) {
                                int oh_lo, oh_hi;
                                axis_bounds(cd.h, cd.oh, stride, padding, kh, oh_lo, oh_hi);
                                for (int kw = 0; kw < cd.k; ++kw) {
                                    int ow_lo, ow_hi;
                                    axis_bounds(cd.w, cd.ow, stride, padding, kw, ow_lo, ow_hi);
                                    int64_t kidx =
                                        kbase + (static_cast<int64_t>(kd) * cd.k + kh) * cd.k + kw;
                                    double wv = ki->value[kidx];
                                    double gw = 0.0;
                                    for (int od = od_lo; od < od_hi; ++od) {
                                        int id = od * stride - padding + kd;
                                        for (int oh = oh_lo; oh < oh_hi; ++oh) {
                                            int ih = oh * stride - padding + kh;
                                            const double* go_row =
                                                go + (static_cast<int64_t>(od) * cd.oh + oh) * cd.ow;
                                            const double* in_row =
                                                in_c + (static_cast<int64_t>(id) * cd.h + ih) * cd.w;
                                            int iw0 = ow_lo * stride - padding + kw;
                                            if (gin_c) {
                                                double* gin_row =
                                                    gin_c +
                                                    (static_cast<int64_t>(id) * cd.h + ih) * cd.w;
                                                for (int ow = ow_lo; ow < ow_hi; ++ow) {
                                                    double gv = go_row[ow];
                                                    gin_row[iw0 + (ow - ow_lo) * stride] += wv * gv;
                                                    gw += gv * in_row[iw0 + (ow - ow_lo) * stride];
                                                }
                                            } else {
                                                for (int ow = ow_lo; ow < ow_hi; ++ow)
                                                    gw += go_row[ow] *
                                                          in_row[iw0 + (ow - ow_lo) * stride];
                                            }
                                        }
                                    }
                                    if (ki->active) ki->grad[kidx] += gw;
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor maxpool3d(Graph& g, const Tensor& input, int window) {
    if (input.rank() != 4 && input.rank() != 5)
        throw std::invalid_argument("maxpool3d: input must be [C,D,H,W] or [B,C,D,H,W], got " +
                                    shape_str(input.shape()));
    if (window < 1) throw std::invalid_argument("maxpool3d: window must be >= 1");

    bool batched = input.rank() == 5;
    const Shape& is = input.shape();
    int off = batched ? 1 : 0;
    int batch = batched ? is[0] : 1;
    int chans = is[off + 0], d = is[off + 1], h = is[off + 2], w = is[off + 3];
    if (d % window || h % window || w % window)
        throw std::invalid_argument("maxpool3d: window " + std::to_string(window) +
                                    " does not divide input dims " + shape_str(is));
    int od = d / window, oh = h / window, ow = w / window;

    bool act = g.recording() && input.active();
    Shape out_shape = batched ? Shape{batch, chans, od, oh, ow} : Shape{chans, od, oh, ow};
    Tensor out = make_op_output(std::move(out_shape), act);

    const double* IN = input.values().data();
    double* OUT = out.impl()->value.data();
    const int64_t in_chan = static_cast<int64_t>(d) * h * w;
    const int64_t out_chan = static_cast<int64_t>(od) * oh * ow;

    // absolute flat argmax per output element, for backward routing
    auto argmax = std::make_shared<std::vector<int64_t>>(out.impl()->value.size());

    int64_t oidx = 0;
    for (int bc = 0; bc < batch * chans; ++bc) {
        const double* in_c = IN + bc * in_chan;
        for (int pd = 0; pd < od; ++pd)
            for (int ph = 0; ph < oh; ++ph)
                for (int pw = 0; pw < ow; ++pw) {
                    double best = -std::numeric_limits<double>::infinity();
                    int64_t best_idx = -1;
                    for (int kd = 0; kd < window; ++kd) {
                        int id = pd * window + kd;
                        for (int kh = 0; kh < window; ++kh) {
                            int ih = ph * window + kh;
                            const double* row = in_c + (static_cast<int64_t>(id) * h + ih) * w;
                            for (int kw = 0; kw < window; ++kw) {
                                int iw = pw * window + kw;
                                if (row[iw] > best) {
                                    best = row[iw];
                                    best_idx = bc * in_chan + (static_cast<int64_t>(id) * h + ih) * w + iw;
                                }
                            }
                        }
                    }
                    OUT[oidx] = best;
                    (*argmax)[oidx] = best_idx;
                    ++oidx;
                }
    }
    (void)out_chan;

    if (act) {
        auto ii = input.impl(), oi = out.impl();
        g.record({ii}, {oi}, [ii, oi, argmax] {
            for (size_t i = 0; i < oi->grad.size(); ++i)
                ii->grad[static_cast<size_t>((*argmax)[i])] += oi->grad[i];
        });
    }
    return out;
}

}  // namespace ndram::ad
