#pragma once

// Batched layer kernels on NHWC float buffers. Weight matrices are stored
// row-major as (rows = k*k*in_c or fan_in) x (cols = out_c or fan_out), so a
// forward pass is a single GEMM against the im2col patch matrix / the input.

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "navtl/nn/network_spec.hpp"

namespace navtl::nn::kernels {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using RowVecMap = Eigen::Map<Eigen::RowVectorXf>;
using ConstRowVecMap = Eigen::Map<const Eigen::RowVectorXf>;

struct ConvGeom {
    Shape3 in;
    Shape3 out;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;

    std::size_t patch() const noexcept { return kernel * kernel * in.c; }
};

/// Gathers every receptive field into one row: (batch*out_h*out_w) x (k*k*in_c).
inline void im2col(std::span<const float> x, std::size_t batch, const ConvGeom& g, std::vector<float>& cols) {
    const std::size_t K = g.patch();
    cols.assign(batch * g.out.h * g.out.w * K, 0.0f);
    float* dst = cols.data();
    const std::size_t row_stride = g.in.w * g.in.c;
    for (std::size_t b = 0; b < batch; ++b) {
        const float* img = x.data() + b * g.in.size();
        for (std::size_t oy = 0; oy < g.out.h; ++oy) {
            for (std::size_t ox = 0; ox < g.out.w; ++ox, dst += K) {
                float* p = dst;
                for (std::size_t ky = 0; ky < g.kernel; ++ky) {
                    const std::ptrdiff_t iy = std::ptrdiff_t(oy * g.stride + ky) - std::ptrdiff_t(g.padding);
                    if (iy < 0 || iy >= std::ptrdiff_t(g.in.h)) {
                        p += g.kernel * g.in.c;
                        continue;
                    }
                    for (std::size_t kx = 0; kx < g.kernel; ++kx, p += g.in.c) {
                        const std::ptrdiff_t ix = std::ptrdiff_t(ox * g.stride + kx) - std::ptrdiff_t(g.padding);
                        if (ix < 0 || ix >= std::ptrdiff_t(g.in.w)) continue;
                        const float* src = img + std::size_t(iy) * row_stride + std::size_t(ix) * g.in.c;
                        for (std::size_t c = 0; c < g.in.c; ++c) p[c] = src[c];
                    }
                }
            }
        }
    }
}

/// Scatter-adds patch gradients back onto the input gradient (inverse of im2col).
inline void col2im(std::span<const float> dcols, std::size_t batch, const ConvGeom& g, std::span<float> dx) {
    const std::size_t K = g.patch();
    std::fill(dx.begin(), dx.end(), 0.0f);
    const float* src = dcols.data();
    const std::size_t row_stride = g.in.w * g.in.c;
    for (std::size_t b = 0; b < batch; ++b) {
        float* img = dx.data() + b * g.in.size();
        for (std::size_t oy = 0; oy < g.out.h; ++oy) {
            for (std::size_t ox = 0; ox < g.out.w; ++ox, src += K) {
                const float* p = src;
                for (std::size_t ky = 0; ky < g.kernel; ++ky) {
                    const std::ptrdiff_t iy = std::ptrdiff_t(oy * g.stride + ky) - std::ptrdiff_t(g.padding);
                    if (iy < 0 || iy >= std::ptrdiff_t(g.in.h)) {
                        p += g.kernel * g.in.c;
                        continue;
                    }
                    for (std::size_t kx = 0; kx < g.kernel; ++kx, p += g.in.c) {
                        const std::ptrdiff_t ix = std::ptrdiff_t(ox * g.stride + kx) - std::ptrdiff_t(g.padding);
                        if (ix < 0 || ix >= std::ptrdiff_t(g.in.w)) continue;
                        float* d = img + std::size_t(iy) * row_stride + std::size_t(ix) * g.in.c;
                        for (std::size_t c = 0; c < g.in.c; ++c) d[c] += p[c];
                    }
                }
            }
        }
    }
}

/// y = im2col(x) * W + b. `cols` receives the patch matrix for reuse in backward.
inline void conv2d_forward(std::span<const float> x, std::size_t batch, const ConvGeom& g,
                           std::span<const float> w, std::span<const float> bias, std::span<float> y,
                           std::vector<float>& cols) {
    im2col(x, batch, g, cols);
    const auto rows = static_cast<Eigen::Index>(batch * g.out.h * g.out.w);
    ConstMatMap P(cols.data(), rows, Eigen::Index(g.patch()));
    ConstMatMap W(w.data(), Eigen::Index(g.patch()), Eigen::Index(g.out.c));
    MatMap Y(y.data(), rows, Eigen::Index(g.out.c));
    Y.noalias() = P * W;
    Y.rowwise() += ConstRowVecMap(bias.data(), Eigen::Index(g.out.c));
}

/// Accumulates dW, db from dy; writes dx when non-empty.
inline void conv2d_backward(std::span<const float> cols, std::size_t batch, const ConvGeom& g,
                            std::span<const float> w, std::span<const float> dy, std::span<float> dw,
                            std::span<float> db, std::span<float> dx) {
    const auto rows = static_cast<Eigen::Index>(batch * g.out.h * g.out.w);
    const auto K = Eigen::Index(g.patch());
    const auto O = Eigen::Index(g.out.c);
    ConstMatMap dY(dy.data(), rows, O);
    if (!dw.empty()) {
        ConstMatMap P(cols.data(), rows, K);
        MatMap(dw.data(), K, O).noalias() = P.transpose() * dY;
        RowVecMap(db.data(), O) = dY.colwise().sum();
    }
    if (!dx.empty()) {
        std::vector<float> dcols(static_cast<std::size_t>(rows * K));
        MatMap dP(dcols.data(), rows, K);
        dP.noalias() = dY * ConstMatMap(w.data(), K, O).transpose();
        col2im(dcols, batch, g, dx);
    }
}

inline void dense_forward(std::span<const float> x, std::size_t batch, std::size_t fan_in, std::size_t fan_out,
                          std::span<const float> w, std::span<const float> bias, std::span<float> y) {
    ConstMatMap X(x.data(), Eigen::Index(batch), Eigen::Index(fan_in));
    ConstMatMap W(w.data(), Eigen::Index(fan_in), Eigen::Index(fan_out));
    MatMap Y(y.data(), Eigen::Index(batch), Eigen::Index(fan_out));
    Y.noalias() = X * W;
    Y.rowwise() += ConstRowVecMap(bias.data(), Eigen::Index(fan_out));
}

inline void dense_backward(std::span<const float> x, std::size_t batch, std::size_t fan_in, std::size_t fan_out,
                           std::span<const float> w, std::span<const float> dy, std::span<float> dw,
                           std::span<float> db, std::span<float> dx) {
    ConstMatMap dY(dy.data(), Eigen::Index(batch), Eigen::Index(fan_out));
    if (!dw.empty()) {
        ConstMatMap X(x.data(), Eigen::Index(batch), Eigen::Index(fan_in));
        MatMap(dw.data(), Eigen::Index(fan_in), Eigen::Index(fan_out)).noalias() = X.transpose() * dY;
        RowVecMap(db.data(), Eigen::Index(fan_out)) = dY.colwise().sum();
    }
    if (!dx.empty()) {
        MatMap(dx.data(), Eigen::Index(batch), Eigen::Index(fan_in)).noalias() =
            dY * ConstMatMap(w.data(), Eigen::Index(fan_in), Eigen::Index(fan_out)).transpose();
    }
}

/// Max pooling without padding; `argmax` records the winning input offset
/// (first maximum on ties) for every output element.
inline void maxpool_forward(std::span<const float> x, std::size_t batch, const ConvGeom& g, std::span<float> y,
                            std::vector<std::uint32_t>& argmax) {
    argmax.resize(y.size());
    std::size_t o = 0;
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t base = b * g.in.size();
        for (std::size_t oy = 0; oy < g.out.h; ++oy)
            for (std::size_t ox = 0; ox < g.out.w; ++ox)
                for (std::size_t c = 0; c < g.in.c; ++c, ++o) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::size_t best_i = 0;
                    for (std::size_t ky = 0; ky < g.kernel; ++ky)
                        for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                            const std::size_t i =
                                base + ((oy * g.stride + ky) * g.in.w + (ox * g.stride + kx)) * g.in.c + c;
                            if (x[i] > best) {
                                best = x[i];
                                best_i = i;
                            }
                        }
                    y[o] = best;
                    argmax[o] = static_cast<std::uint32_t>(best_i);
                }
    }
}

inline void maxpool_backward(std::span<const float> dy, std::span<const std::uint32_t> argmax, std::span<float> dx) {
    std::fill(dx.begin(), dx.end(), 0.0f);
    for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax[o]] += dy[o];
}

inline void relu_forward(std::span<const float> x, std::span<float> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

inline void relu_backward(std::span<const float> x, std::span<const float> dy, std::span<float> dx) {
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

/// Splits each row of a (batch x 2n) matrix into halves.
inline void split_forward(std::span<const float> x, std::size_t batch, std::size_t half, std::span<float> first,
                          std::span<float> second) {
    for (std::size_t b = 0; b < batch; ++b) {
        const float* row = x.data() + b * 2 * half;
        std::copy(row, row + half, first.data() + b * half);
        std::copy(row + half, row + 2 * half, second.data() + b * half);
    }
}

inline void split_backward(std::span<const float> dfirst, std::span<const float> dsecond, std::size_t batch,
                           std::size_t half, std::span<float> dx) {
    for (std::size_t b = 0; b < batch; ++b) {
        float* row = dx.data() + b * 2 * half;
        std::copy(dfirst.data() + b * half, dfirst.data() + (b + 1) * half, row);
        std::copy(dsecond.data() + b * half, dsecond.data() + (b + 1) * half, row + half);
    }
}

/// q(s,a) = v(s) + adv(s,a) - mean_a adv(s,a)
inline void dueling_forward(std::span<const float> value, std::span<const float> adv, std::size_t batch,
                            std::size_t actions, std::span<float> q) {
    for (std::size_t b = 0; b < batch; ++b) {
        const float* a = adv.data() + b * actions;
        float mean = 0.0f;
        for (std::size_t k = 0; k < actions; ++k) mean += a[k];
        mean /= float(actions);
        for (std::size_t k = 0; k < actions; ++k) q[b * actions + k] = value[b] + (a[k] - mean);
    }
}

inline void dueling_backward(std::span<const float> dq, std::size_t batch, std::size_t actions,
                             std::span<float> dvalue, std::span<float> dadv) {
    for (std::size_t b = 0; b < batch; ++b) {
        const float* g = dq.data() + b * actions;
        float sum = 0.0f;
        for (std::size_t k = 0; k < actions; ++k) sum += g[k];
        dvalue[b] = sum;
        const float mean = sum / float(actions);
        for (std::size_t k = 0; k < actions; ++k) dadv[b * actions + k] = g[k] - mean;
    }
}

}  // namespace navtl::nn::kernels
