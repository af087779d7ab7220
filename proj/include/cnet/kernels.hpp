#pragma once

#include <vector>

#include "cnet/tensor.hpp"

// Numerical kernels on plain tensors. Pure functions: no hidden state
// except where a running-statistics tensor is passed by reference.
// Every kernel validates shapes and rejects non-finite outputs.

namespace cnet::kernels {

// --- convolution -------------------------------------------------------

// x: (N,C_in,H,W), w: (C_out,C_in,K,K) with K odd, bias: (C_out) or null.
// Output (N,C_out,H',W') with H' = (H + 2*pad - K)/stride + 1.
// im2col + GEMM inside; the contract is the direct convolution sum.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad);

struct ConvGrads {
    Tensor gx;
    Tensor gw;
    Tensor gb;  // empty when has_bias = false
    bool has_bias = false;
};
ConvGrads conv2d_backward(const Tensor& gy, const Tensor& x, const Tensor& w,
                          int stride, int pad, bool has_bias);

// --- pooling (2x2, stride 2) ------------------------------------------

struct MaxPoolResult {
    Tensor y;
    std::vector<int64_t> argmax;  // flat input index per output element
};
MaxPoolResult max_pool2(const Tensor& x);
Tensor max_pool2_backward(const Tensor& gy, const std::vector<int64_t>& argmax, const Shape& in_shape);

Tensor avg_pool2(const Tensor& x);
Tensor avg_pool2_backward(const Tensor& gy, const Shape& in_shape);

// (N,C,H,W) -> (N,C), mean over H,W.
Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Tensor& gy, const Shape& in_shape);

// --- batch normalization ------------------------------------------------

struct BatchNormResult {
    Tensor y;
    Tensor xhat;                 // normalized input, saved for backward
    std::vector<double> invstd;  // per channel, from batch stats (train) or running stats (eval)
};
// Training mode normalizes with batch statistics (biased variance) and
// updates running_mean/var in place: r = (1-momentum)*r + momentum*batch.
BatchNormResult batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                            Tensor& running_mean, Tensor& running_var,
                            double eps, double momentum, bool training);

struct BatchNormGrads {
    Tensor gx;
    Tensor ggamma;
    Tensor gbeta;
};
BatchNormGrads batchnorm2d_backward(const Tensor& gy, const BatchNormResult& ctx,
                                    const Tensor& gamma, bool training);

// --- elementwise / structural ------------------------------------------

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& gy, const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);

// Concatenate along the channel axis; inputs must agree in N,H,W.
Tensor concat_channels(const std::vector<const Tensor*>& xs);
// Inverse given the channel widths of the original inputs.
std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int>& channels);

// --- classifier head -----------------------------------------------------

// x: (N,D), w: (D,K), b: (K) -> (N,K)
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
struct LinearGrads {
    Tensor gx;
    Tensor gw;
    Tensor gb;
};
LinearGrads linear_backward(const Tensor& gy, const Tensor& x, const Tensor& w);

// Row-wise softmax with max subtraction.
Tensor softmax(const Tensor& logits);
struct CrossEntropyResult {
    double loss;   // mean over the batch
    Tensor probs;  // saved for backward
};
CrossEntropyResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);
Tensor softmax_cross_entropy_backward(double gloss, const Tensor& probs, const std::vector<int>& labels);

}  // namespace cnet::kernels
