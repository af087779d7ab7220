#include "cnet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "cnet/parallel.hpp"
#include "cnet/simd.hpp"

namespace cnet::kernels {
namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// One sample: x (C,H,W) -> col (C*K*K, Ho*Wo), zero-padded.
void im2col(const double* x, int c_in, int h, int w, int k, int stride, int pad,
            int ho, int wo, double* col) {
    const long plane = static_cast<long>(ho) * wo;
    for (int c = 0; c < c_in; ++c) {
        for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
                double* dst = col + (static_cast<long>(c) * k * k + kh * k + kw) * plane;
                for (int oh = 0; oh < ho; ++oh) {
                    const int ih = oh * stride - pad + kh;
                    if (ih < 0 || ih >= h) {
                        std::fill(dst + static_cast<long>(oh) * wo, dst + static_cast<long>(oh + 1) * wo, 0.0);
                        continue;
                    }
                    const double* src = x + (static_cast<long>(c) * h + ih) * w;
                    for (int ow = 0; ow < wo; ++ow) {
                        const int iw = ow * stride - pad + kw;
                        dst[static_cast<long>(oh) * wo + ow] = (iw >= 0 && iw < w) ? src[iw] : 0.0;
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-add columns back into the (C,H,W) image.
void col2im(const double* col, int c_in, int h, int w, int k, int stride, int pad,
            int ho, int wo, double* x) {
    const long plane = static_cast<long>(ho) * wo;
    for (int c = 0; c < c_in; ++c) {
        for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
                const double* src = col + (static_cast<long>(c) * k * k + kh * k + kw) * plane;
                for (int oh = 0; oh < ho; ++oh) {
                    const int ih = oh * stride - pad + kh;
                    if (ih < 0 || ih >= h) continue;
                    double* dst = x + (static_cast<long>(c) * h + ih) * w;
                    for (int ow = 0; ow < wo; ++ow) {
                        const int iw = ow * stride - pad + kw;
                        if (iw >= 0 && iw < w) dst[iw] += src[static_cast<long>(oh) * wo + ow];
                    }
                }
            }
        }
    }
}

struct ConvDims {
    int n, c_in, h, w, c_out, k, ho, wo;
    long col_rows, out_plane;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
    require(x.rank() == 4, "conv2d: input must be 4-d, got " + x.shape().str());
    require(w.rank() == 4, "conv2d: weight must be 4-d, got " + w.shape().str());
    require(w.dim(2) == w.dim(3), "conv2d: kernel must be square, got " + w.shape().str());
    require(w.dim(2) % 2 == 1, "conv2d: kernel size must be odd, got " + std::to_string(w.dim(2)));
    require(w.dim(1) == x.dim(1), "conv2d: input channels " + std::to_string(x.dim(1)) +
                                      " do not match weight channels " + std::to_string(w.dim(1)));
    require(stride >= 1, "conv2d: stride must be >= 1");
    require(pad >= 0, "conv2d: pad must be >= 0");
    ConvDims d;
    d.n = x.dim(0);
    d.c_in = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
    d.c_out = w.dim(0);
    d.k = w.dim(2);
    require(d.h + 2 * pad >= d.k && d.w + 2 * pad >= d.k, "conv2d: kernel larger than padded input");
    d.ho = (d.h + 2 * pad - d.k) / stride + 1;
    d.wo = (d.w + 2 * pad - d.k) / stride + 1;
    d.col_rows = static_cast<long>(d.c_in) * d.k * d.k;
    d.out_plane = static_cast<long>(d.ho) * d.wo;
    return d;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad) {
    const ConvDims d = conv_dims(x, w, stride, pad);
    if (bias) {
        require(bias->rank() == 1 && bias->dim(0) == d.c_out,
                "conv2d: bias shape " + bias->shape().str() + " does not match C_out");
    }
    check_finite(x, "conv2d input");
    check_finite(w, "conv2d weight");

    Tensor y(Shape{d.n, d.c_out, d.ho, d.wo});
    const auto& ops = simd::ops();
    parallel_for(d.n, [&](int64_t n) {
        std::vector<double> col(static_cast<size_t>(d.col_rows * d.out_plane));
        im2col(x.data() + n * d.c_in * d.h * d.w, d.c_in, d.h, d.w, d.k, stride, pad, d.ho, d.wo, col.data());
        double* yn = y.data() + n * d.c_out * d.out_plane;
        for (int o = 0; o < d.c_out; ++o) {
            const double b = bias ? (*bias)[o] : 0.0;
            std::fill(yn + o * d.out_plane, yn + (o + 1) * d.out_plane, b);
        }
        ops.gemm_nn(d.c_out, static_cast<int>(d.out_plane), static_cast<int>(d.col_rows), w.data(), col.data(), yn);
    });
    check_finite(y, "conv2d");
    return y;
}

ConvGrads conv2d_backward(const Tensor& gy, const Tensor& x, const Tensor& w,
                          int stride, int pad, bool has_bias) {
    const ConvDims d = conv_dims(x, w, stride, pad);
    require(gy.rank() == 4 && gy.dim(0) == d.n && gy.dim(1) == d.c_out && gy.dim(2) == d.ho && gy.dim(3) == d.wo,
            "conv2d_backward: grad shape " + gy.shape().str() + " does not match output shape");

    ConvGrads g;
    g.has_bias = has_bias;
    g.gx = Tensor(x.shape());
    g.gw = Tensor(w.shape());
    if (has_bias) g.gb = Tensor(Shape{d.c_out});

    // Weight layout (C_out, C_in*K*K) transposed once for the input adjoint.
    std::vector<double> wt(static_cast<size_t>(d.col_rows * d.c_out));
    for (int o = 0; o < d.c_out; ++o)
        for (long r = 0; r < d.col_rows; ++r)
            wt[static_cast<size_t>(r * d.c_out + o)] = w.data()[o * d.col_rows + r];

    // Per-sample weight-gradient partials, reduced in sample order so the
    // result is independent of the thread count.
    std::vector<std::vector<double>> gw_partial(static_cast<size_t>(d.n));
    const auto& ops = simd::ops();
    parallel_for(d.n, [&](int64_t n) {
        std::vector<double> col(static_cast<size_t>(d.col_rows * d.out_plane));
        im2col(x.data() + n * d.c_in * d.h * d.w, d.c_in, d.h, d.w, d.k, stride, pad, d.ho, d.wo, col.data());
        const double* gyn = gy.data() + n * d.c_out * d.out_plane;

        auto& gwp = gw_partial[static_cast<size_t>(n)];
        gwp.assign(static_cast<size_t>(d.c_out * d.col_rows), 0.0);
        ops.gemm_nt(d.c_out, static_cast<int>(d.col_rows), static_cast<int>(d.out_plane), gyn, col.data(), gwp.data());

        std::vector<double> gcol(static_cast<size_t>(d.col_rows * d.out_plane), 0.0);
        ops.gemm_nn(static_cast<int>(d.col_rows), static_cast<int>(d.out_plane), d.c_out, wt.data(), gyn, gcol.data());
        col2im(gcol.data(), d.c_in, d.h, d.w, d.k, stride, pad, d.ho, d.wo, g.gx.data() + n * d.c_in * d.h * d.w);
    });
    for (int64_t n = 0; n < d.n; ++n) {
        ops.axpy(static_cast<int>(d.c_out * d.col_rows), 1.0, gw_partial[static_cast<size_t>(n)].data(), g.gw.data());
    }
    if (has_bias) {
        for (int64_t n = 0; n < d.n; ++n) {
            const double* gyn = gy.data() + n * d.c_out * d.out_plane;
            for (int o = 0; o < d.c_out; ++o) {
                double acc = 0.0;
                for (long i = 0; i < d.out_plane; ++i) acc += gyn[o * d.out_plane + i];
                g.gb[o] += acc;
            }
        }
    }
    check_finite(g.gx, "conv2d_backward gx");
    check_finite(g.gw, "conv2d_backward gw");
    return g;
}

namespace {

void pool_dims(const Tensor& x, const char* op) {
    require(x.rank() == 4, std::string(op) + ": input must be 4-d");
    require(x.dim(2) % 2 == 0 && x.dim(3) % 2 == 0,
            std::string(op) + ": spatial dims must be even, got " + x.shape().str());
}

}  // namespace

MaxPoolResult max_pool2(const Tensor& x) {
    pool_dims(x, "max_pool2");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int ho = h / 2, wo = w / 2;
    MaxPoolResult r{Tensor(Shape{n, c, ho, wo}), {}};
    r.argmax.assign(static_cast<size_t>(r.y.size()), 0);
    parallel_for(static_cast<int64_t>(n) * c, [&](int64_t nc) {
        const double* xp = x.data() + nc * h * w;
        double* yp = r.y.data() + nc * ho * wo;
        int64_t* ap = r.argmax.data() + nc * ho * wo;
        for (int oh = 0; oh < ho; ++oh) {
            for (int ow = 0; ow < wo; ++ow) {
                const int ih = 2 * oh, iw = 2 * ow;
                int64_t best = static_cast<int64_t>(ih) * w + iw;
                double bv = xp[best];
                const int64_t cands[3] = {static_cast<int64_t>(ih) * w + iw + 1,
                                          static_cast<int64_t>(ih + 1) * w + iw,
                                          static_cast<int64_t>(ih + 1) * w + iw + 1};
                for (int64_t idx : cands) {
                    if (xp[idx] > bv) { bv = xp[idx]; best = idx; }
                }
                yp[static_cast<int64_t>(oh) * wo + ow] = bv;
                ap[static_cast<int64_t>(oh) * wo + ow] = nc * h * w + best;
            }
        }
    });
    check_finite(r.y, "max_pool2");
    return r;
}

Tensor max_pool2_backward(const Tensor& gy, const std::vector<int64_t>& argmax, const Shape& in_shape) {
    require(static_cast<int64_t>(argmax.size()) == gy.size(), "max_pool2_backward: argmax size mismatch");
    Tensor gx(in_shape);
    for (int64_t i = 0; i < gy.size(); ++i) gx[argmax[static_cast<size_t>(i)]] += gy[i];
    return gx;
}

Tensor avg_pool2(const Tensor& x) {
    pool_dims(x, "avg_pool2");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int ho = h / 2, wo = w / 2;
    Tensor y(Shape{n, c, ho, wo});
    parallel_for(static_cast<int64_t>(n) * c, [&](int64_t nc) {
        const double* xp = x.data() + nc * h * w;
        double* yp = y.data() + nc * ho * wo;
        for (int oh = 0; oh < ho; ++oh)
            for (int ow = 0; ow < wo; ++ow) {
                const int ih = 2 * oh, iw = 2 * ow;
                yp[static_cast<int64_t>(oh) * wo + ow] =
                    0.25 * (xp[static_cast<int64_t>(ih) * w + iw] + xp[static_cast<int64_t>(ih) * w + iw + 1] +
                            xp[static_cast<int64_t>(ih + 1) * w + iw] + xp[static_cast<int64_t>(ih + 1) * w + iw + 1]);
            }
    });
    check_finite(y, "avg_pool2");
    return y;
}

Tensor avg_pool2_backward(const Tensor& gy, const Shape& in_shape) {
    Tensor gx(in_shape);
    const int h = in_shape[2], w = in_shape[3];
    const int ho = h / 2, wo = w / 2;
    const int64_t planes = static_cast<int64_t>(in_shape[0]) * in_shape[1];
    for (int64_t nc = 0; nc < planes; ++nc) {
        const double* gp = gy.data() + nc * ho * wo;
        double* xp = gx.data() + nc * h * w;
        for (int oh = 0; oh < ho; ++oh)
            for (int ow = 0; ow < wo; ++ow) {
                const double g = 0.25 * gp[static_cast<int64_t>(oh) * wo + ow];
                const int ih = 2 * oh, iw = 2 * ow;
                xp[static_cast<int64_t>(ih) * w + iw] += g;
                xp[static_cast<int64_t>(ih) * w + iw + 1] += g;
                xp[static_cast<int64_t>(ih + 1) * w + iw] += g;
                xp[static_cast<int64_t>(ih + 1) * w + iw + 1] += g;
            }
    }
    return gx;
}

Tensor global_avg_pool(const Tensor& x) {
    require(x.rank() == 4, "global_avg_pool: input must be 4-d");
    const int n = x.dim(0), c = x.dim(1);
    const int64_t hw = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    Tensor y(Shape{n, c});
    for (int64_t nc = 0; nc < static_cast<int64_t>(n) * c; ++nc) {
        const double* xp = x.data() + nc * hw;
        double acc = 0.0;
        for (int64_t i = 0; i < hw; ++i) acc += xp[i];
        y[nc] = acc / static_cast<double>(hw);
    }
    check_finite(y, "global_avg_pool");
    return y;
}

Tensor global_avg_pool_backward(const Tensor& gy, const Shape& in_shape) {
    Tensor gx(in_shape);
    const int64_t hw = static_cast<int64_t>(in_shape[2]) * in_shape[3];
    const double inv = 1.0 / static_cast<double>(hw);
    for (int64_t nc = 0; nc < gy.size(); ++nc) {
        double* xp = gx.data() + nc * hw;
        const double g = gy[nc] * inv;
        for (int64_t i = 0; i < hw; ++i) xp[i] = g;
    }
    return gx;
}

BatchNormResult batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                            Tensor& running_mean, Tensor& running_var,
                            double eps, double momentum, bool training) {
    require(x.rank() == 4, "batchnorm2d: input must be 4-d");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    require(gamma.rank() == 1 && gamma.dim(0) == c, "batchnorm2d: gamma channels do not match input");
    require(beta.rank() == 1 && beta.dim(0) == c, "batchnorm2d: beta channels do not match input");
    require(running_mean.dim(0) == c && running_var.dim(0) == c, "batchnorm2d: running stats channel mismatch");
    require(eps > 0.0, "batchnorm2d: eps must be > 0");

    BatchNormResult r{Tensor(x.shape()), Tensor(x.shape()), std::vector<double>(static_cast<size_t>(c))};
    const int64_t hw = static_cast<int64_t>(h) * w;
    const int64_t m = static_cast<int64_t>(n) * hw;

    for (int ch = 0; ch < c; ++ch) {
        double mean, invstd;
        if (training) {
            double s = 0.0;
            for (int b = 0; b < n; ++b) {
                const double* xp = x.data() + (static_cast<int64_t>(b) * c + ch) * hw;
                for (int64_t i = 0; i < hw; ++i) s += xp[i];
            }
            mean = s / static_cast<double>(m);
            double v = 0.0;
            for (int b = 0; b < n; ++b) {
                const double* xp = x.data() + (static_cast<int64_t>(b) * c + ch) * hw;
                for (int64_t i = 0; i < hw; ++i) {
                    const double d = xp[i] - mean;
                    v += d * d;
                }
            }
            v /= static_cast<double>(m);
            invstd = 1.0 / std::sqrt(v + eps);
            running_mean[ch] = (1.0 - momentum) * running_mean[ch] + momentum * mean;
            running_var[ch] = (1.0 - momentum) * running_var[ch] + momentum * v;
        } else {
            mean = running_mean[ch];
            invstd = 1.0 / std::sqrt(running_var[ch] + eps);
        }
        r.invstd[static_cast<size_t>(ch)] = invstd;
        const double g = gamma[ch], bta = beta[ch];
        for (int b = 0; b < n; ++b) {
            const int64_t off = (static_cast<int64_t>(b) * c + ch) * hw;
            const double* xp = x.data() + off;
            double* xh = r.xhat.data() + off;
            double* yp = r.y.data() + off;
            for (int64_t i = 0; i < hw; ++i) {
                xh[i] = (xp[i] - mean) * invstd;
                yp[i] = g * xh[i] + bta;
            }
        }
    }
    check_finite(r.y, "batchnorm2d");
    return r;
}

BatchNormGrads batchnorm2d_backward(const Tensor& gy, const BatchNormResult& ctx,
                                    const Tensor& gamma, bool training) {
    const Tensor& xhat = ctx.xhat;
    require(gy.shape() == xhat.shape(), "batchnorm2d_backward: grad shape mismatch");
    const int n = gy.dim(0), c = gy.dim(1);
    const int64_t hw = static_cast<int64_t>(gy.dim(2)) * gy.dim(3);
    const double m = static_cast<double>(static_cast<int64_t>(n) * hw);

    BatchNormGrads g{Tensor(gy.shape()), Tensor(Shape{c}), Tensor(Shape{c})};
    for (int ch = 0; ch < c; ++ch) {
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int b = 0; b < n; ++b) {
            const int64_t off = (static_cast<int64_t>(b) * c + ch) * hw;
            const double* gp = gy.data() + off;
            const double* xh = xhat.data() + off;
            for (int64_t i = 0; i < hw; ++i) {
                sum_gy += gp[i];
                sum_gy_xhat += gp[i] * xh[i];
            }
        }
        g.gbeta[ch] = sum_gy;
        g.ggamma[ch] = sum_gy_xhat;
        const double scale = gamma[ch] * ctx.invstd[static_cast<size_t>(ch)];
        for (int b = 0; b < n; ++b) {
            const int64_t off = (static_cast<int64_t>(b) * c + ch) * hw;
            const double* gp = gy.data() + off;
            const double* xh = xhat.data() + off;
            double* gx = g.gx.data() + off;
            if (training) {
                for (int64_t i = 0; i < hw; ++i)
                    gx[i] = scale / m * (m * gp[i] - sum_gy - xh[i] * sum_gy_xhat);
            } else {
                for (int64_t i = 0; i < hw; ++i) gx[i] = scale * gp[i];
            }
        }
    }
    return g;
}

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    simd::ops().relu(static_cast<int>(x.size()), x.data(), y.data());
    check_finite(y, "relu");
    return y;
}

Tensor relu_backward(const Tensor& gy, const Tensor& x) {
    require(gy.shape() == x.shape(), "relu_backward: shape mismatch");
    Tensor gx(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) gx[i] = x[i] > 0.0 ? gy[i] : 0.0;
    return gx;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.shape() == b.shape(),
            "add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    Tensor y(a.shape());
    simd::ops().add(static_cast<int>(a.size()), a.data(), b.data(), y.data());
    check_finite(y, "add");
    return y;
}

Tensor concat_channels(const std::vector<const Tensor*>& xs) {
    require(!xs.empty(), "concat_channels: empty input list");
    const Tensor& first = *xs[0];
    require(first.rank() == 4, "concat_channels: inputs must be 4-d");
    int c_total = 0;
    for (const Tensor* t : xs) {
        require(t->rank() == 4 && t->dim(0) == first.dim(0) && t->dim(2) == first.dim(2) &&
                    t->dim(3) == first.dim(3),
                "concat_channels: incompatible shape " + t->shape().str() + " vs " + first.shape().str());
        c_total += t->dim(1);
    }
    const int n = first.dim(0);
    const int64_t hw = static_cast<int64_t>(first.dim(2)) * first.dim(3);
    Tensor y(Shape{n, c_total, first.dim(2), first.dim(3)});
    for (int b = 0; b < n; ++b) {
        int64_t coff = 0;
        for (const Tensor* t : xs) {
            const int64_t len = static_cast<int64_t>(t->dim(1)) * hw;
            std::memcpy(y.data() + (static_cast<int64_t>(b) * c_total) * hw + coff,
                        t->data() + static_cast<int64_t>(b) * len, static_cast<size_t>(len) * sizeof(double));
            coff += len;
        }
    }
    return y;
}

std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int>& channels) {
    int c_total = 0;
    for (int c : channels) c_total += c;
    require(x.rank() == 4 && x.dim(1) == c_total, "split_channels: channel widths do not sum to input channels");
    const int n = x.dim(0);
    const int64_t hw = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    std::vector<Tensor> out;
    out.reserve(channels.size());
    int64_t coff = 0;
    for (int c : channels) {
        Tensor t(Shape{n, c, x.dim(2), x.dim(3)});
        const int64_t len = static_cast<int64_t>(c) * hw;
        for (int b = 0; b < n; ++b) {
            std::memcpy(t.data() + static_cast<int64_t>(b) * len,
                        x.data() + (static_cast<int64_t>(b) * c_total) * hw + coff,
                        static_cast<size_t>(len) * sizeof(double));
        }
        coff += len;
        out.push_back(std::move(t));
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    require(x.rank() == 2 && w.rank() == 2 && b.rank() == 1, "linear: bad ranks");
    require(x.dim(1) == w.dim(0), "linear: input width " + std::to_string(x.dim(1)) +
                                      " does not match weight rows " + std::to_string(w.dim(0)));
    require(b.dim(0) == w.dim(1), "linear: bias width mismatch");
    const int n = x.dim(0), d = x.dim(1), k = w.dim(1);
    Tensor y(Shape{n, k});
    for (int i = 0; i < n; ++i)
        std::memcpy(y.data() + static_cast<int64_t>(i) * k, b.data(), static_cast<size_t>(k) * sizeof(double));
    simd::ops().gemm_nn(n, k, d, x.data(), w.data(), y.data());
    check_finite(y, "linear");
    return y;
}

LinearGrads linear_backward(const Tensor& gy, const Tensor& x, const Tensor& w) {
    const int n = x.dim(0), d = x.dim(1), k = w.dim(1);
    require(gy.rank() == 2 && gy.dim(0) == n && gy.dim(1) == k, "linear_backward: grad shape mismatch");
    LinearGrads g{Tensor(x.shape()), Tensor(w.shape()), Tensor(Shape{k})};
    simd::ops().gemm_nt(n, d, k, gy.data(), w.data(), g.gx.data());
    const auto& ops = simd::ops();
    for (int i = 0; i < n; ++i) {
        const double* gyr = gy.data() + static_cast<int64_t>(i) * k;
        for (int j = 0; j < d; ++j)
            ops.axpy(k, x.at2(i, j), gyr, g.gw.data() + static_cast<int64_t>(j) * k);
        ops.axpy(k, 1.0, gyr, g.gb.data());
    }
    return g;
}

Tensor softmax(const Tensor& logits) {
    require(logits.rank() == 2, "softmax: input must be 2-d");
    const int n = logits.dim(0), k = logits.dim(1);
    Tensor p(logits.shape());
    for (int i = 0; i < n; ++i) {
        const double* row = logits.data() + static_cast<int64_t>(i) * k;
        double* out = p.data() + static_cast<int64_t>(i) * k;
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double z = 0.0;
        for (int j = 0; j < k; ++j) {
            out[j] = std::exp(row[j] - mx);
            z += out[j];
        }
        for (int j = 0; j < k; ++j) out[j] /= z;
    }
    check_finite(p, "softmax");
    return p;
}

CrossEntropyResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const int n = logits.dim(0), k = logits.dim(1);
    require(static_cast<int>(labels.size()) == n, "softmax_cross_entropy: label count mismatch");
    for (int lab : labels)
        require(lab >= 0 && lab < k, "softmax_cross_entropy: label " + std::to_string(lab) + " out of range");
    CrossEntropyResult r{0.0, softmax(logits)};
    for (int i = 0; i < n; ++i)
        r.loss -= std::log(std::max(r.probs.at2(i, labels[static_cast<size_t>(i)]), 1e-300));
    r.loss /= static_cast<double>(n);
    return r;
}

Tensor softmax_cross_entropy_backward(double gloss, const Tensor& probs, const std::vector<int>& labels) {
    const int n = probs.dim(0), k = probs.dim(1);
    Tensor g(probs.shape());
    const double scale = gloss / static_cast<double>(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) g.at2(i, j) = scale * probs.at2(i, j);
        g.at2(i, labels[static_cast<size_t>(i)]) -= scale;
    }
    return g;
}

}  // namespace cnet::kernels
