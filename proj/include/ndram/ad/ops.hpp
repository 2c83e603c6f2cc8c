#pragma once

#include <utility>

#include "ndram/ad/graph.hpp"
#include "ndram/ad/tensor.hpp"

namespace ndram::ad {

// ---------------------------------------------------------------------------
// Elementwise / shape ops. Vector ops accept rank-1 [n] or batched rank-2
// [B,n] tensors; the output rank follows the input.
// ---------------------------------------------------------------------------

Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor elementwise_mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, const Tensor& x, double c);
Tensor add_scalar(Graph& g, const Tensor& x, double c);
Tensor tanh(Graph& g, const Tensor& x);
Tensor sigmoid(Graph& g, const Tensor& x);
Tensor reshape(Graph& g, const Tensor& x, Shape shape);

// sum of all elements -> scalar [1]
Tensor sum(Graph& g, const Tensor& x);
// [B,n] -> [B], summing within each row
Tensor row_sum(Graph& g, const Tensor& x);
// [n] -> [rows,n]; backward column-sums
Tensor row_broadcast(Graph& g, const Tensor& x, int rows);

// Identity forward, but gradients never flow upstream across this edge.
Tensor stop_gradient(Graph& g, const Tensor& x);

// y = W x + b with W [m,n], b [m]; x is [n] or [B,n].
Tensor linear(Graph& g, const Tensor& x, const Tensor& weight, const Tensor& bias);

// ---------------------------------------------------------------------------
// Convolutional stack. Inputs are [C,D,H,W] or batched [B,C,D,H,W]; kernels
// [Cout,Cin,k,k,k]; output spatial dims follow floor((D+2p-k)/s)+1.
// ---------------------------------------------------------------------------

Tensor conv3d(Graph& g, const Tensor& input, const Tensor& kernels, const Tensor& bias,
              int stride = 1, int padding = 0);

// Non-overlapping window max; window must divide each spatial dim. Backward
// routes to the argmax, first occurrence in row-major scan on ties.
Tensor maxpool3d(Graph& g, const Tensor& input, int window);

enum class BnMode { Train, Infer };

struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNormState(int channels = 0)
        : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

// Per-channel normalization over (B,D,H,W) of a [B,C,D,H,W] input. Train mode
// needs B >= 2 and updates the running stats by EMA; infer mode reads them.
Tensor batchnorm3d(Graph& g, const Tensor& input, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, BnMode mode);

// ---------------------------------------------------------------------------
// Recurrent cell. Gate order in the stacked weights is input, forget,
// candidate, output: w_ih [4H,n_in], w_hh [4H,H], bias [4H].
// ---------------------------------------------------------------------------

struct LstmWeights {
    Tensor w_ih;
    Tensor w_hh;
    Tensor bias;
};

// x [n_in] or [B,n_in]; h,c match. Returns (h', c').
std::pair<Tensor, Tensor> lstm_cell(Graph& g, const Tensor& x, const Tensor& h,
                                    const Tensor& c, const LstmWeights& w);

// ---------------------------------------------------------------------------
// Losses / policy terms
// ---------------------------------------------------------------------------

// Sum_i -[y log p + (1-y) log(1-p)] over probabilities p [B], labels y in
// {0,1}. When p came out of sigmoid() the loss is evaluated from the stored
// logits (log-sum-exp stable); otherwise from p directly, with p==y giving an
// exact 0 term and no input ever producing Inf.
Tensor bce_loss(Graph& g, const Tensor& p, const Tensor& y);

// Stable form used internally and by training: z are pre-sigmoid logits [B].
Tensor bce_with_logits(Graph& g, const Tensor& logits, const Tensor& y);

// Log-density of `sample` (constant) under N(mean, sigma^2 I), summed per row:
// [B,k] inputs -> [B]. Built from primitive ops, differentiable w.r.t. mean.
Tensor gaussian_log_prob(Graph& g, const Tensor& sample, const Tensor& mean, double sigma);

}  // namespace ndram::ad
