#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfrbp/nn/tensor.hpp"

// Forward/backward kernels for the fixed layer set used by the social
// pooling models. Backward functions accumulate (+=) into parameter
// gradients so a batch can be reduced into one ParameterStore.

namespace mfrbp::nn {

inline constexpr double kLeakySlope = 0.1;

// ---- leaky ReLU -----------------------------------------------------------

Tensor leaky_relu(const Tensor& x, double alpha = kLeakySlope);
/// dL/dx given the pre-activation input and dL/dy.
Tensor leaky_relu_backward(const Tensor& x, const Tensor& grad_out, double alpha = kLeakySlope);

void leaky_relu_inplace(std::span<double> x, double alpha = kLeakySlope);
/// Scales `grad` in place by the slope at each pre-activation value.
void leaky_relu_backward_inplace(std::span<const double> pre_activation, std::span<double> grad,
                                 double alpha = kLeakySlope);

// ---- fully connected --------------------------------------------------------

/// y = W x + b with W of shape [out, in]. `y` is overwritten.
void linear(std::span<const double> x, const Tensor& weight, const Tensor& bias,
            std::span<double> y);
/// Accumulates dW, db and (when dx is non-empty) dx.
void linear_backward(std::span<const double> x, const Tensor& weight,
                     std::span<const double> grad_out, Tensor& grad_weight, Tensor& grad_bias,
                     std::span<double> grad_x);

/// Batched convenience form: input is [in] or [batch, in].
Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias);

struct FullyConnectedGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;
};
FullyConnectedGrads fully_connected_backward(const Tensor& input, const Tensor& weight,
                                             const Tensor& grad_out);

// ---- convolution and pooling ------------------------------------------------

struct Conv2dSpec {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

/// Valid-mode cross-correlation. input [C, H, W], kernels [F, C, KH, KW],
/// bias [F]; output [F, Ho, Wo].
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, Conv2dSpec spec = {});
/// Accumulates kernel/bias gradients; writes the input gradient if requested.
void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                     Conv2dSpec spec, Tensor& grad_kernels, Tensor& grad_bias,
                     Tensor* grad_input);

struct MaxPoolResult {
  Tensor output;
  /// Flat input index that produced each output element.
  std::vector<std::size_t> argmax;
};

/// Non-overlapping pooling (stride = window) over [C, H, W]; trailing rows or
/// columns that do not fill a window are dropped.
MaxPoolResult max_pool2d(const Tensor& input, std::size_t window_h, std::size_t window_w);
Tensor max_pool2d_backward(const std::vector<std::size_t>& input_shape,
                           const std::vector<std::size_t>& argmax, const Tensor& grad_out);

// ---- LSTM ---------------------------------------------------------------------

/// Gate rows are ordered input, forget, candidate, output; w_ih is [4H, in],
/// w_hh is [4H, H], bias is [4H].
struct LstmWeights {
  const Tensor& w_ih;
  const Tensor& w_hh;
  const Tensor& bias;
  std::size_t hidden() const { return w_hh.dim(1); }
  std::size_t input() const { return w_ih.dim(1); }
};

struct LstmGrads {
  Tensor& w_ih;
  Tensor& w_hh;
  Tensor& bias;
};

/// Everything a single cell step needs for its backward pass.
struct LstmStep {
  std::vector<double> h_prev;
  std::vector<double> c_prev;
  std::vector<double> gates;  // post-activation, 4H
  std::vector<double> c;
  std::vector<double> tanh_c;
  std::vector<double> h;
};

/// proj = W_ih x + b. Steps sharing one input can reuse a projection.
void lstm_input_projection(std::span<const double> x, const LstmWeights& w,
                           std::span<double> proj);
void lstm_cell_forward_projected(std::span<const double> proj, std::span<const double> h_prev,
                                 std::span<const double> c_prev, const LstmWeights& w,
                                 LstmStep& step);
void lstm_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                       std::span<const double> c_prev, const LstmWeights& w, LstmStep& step);

/// Backward through one step. Writes dproj (gradient of the gate
/// pre-activations, which is also dL/dproj), dh_prev and dc_prev; accumulates
/// the recurrent weight gradient.
void lstm_cell_backward_projected(const LstmStep& step, const LstmWeights& w,
                                  std::span<const double> dh, std::span<const double> dc,
                                  Tensor& grad_w_hh, std::span<double> dproj,
                                  std::span<double> dh_prev, std::span<double> dc_prev);
/// Accumulates dW_ih, db from dproj; accumulates dx when non-empty.
void lstm_projection_backward(std::span<const double> x, const LstmWeights& w,
                              std::span<const double> dproj, LstmGrads& grads,
                              std::span<double> dx);

/// Unrolled LSTM over a sequence of inputs starting from zero state.
struct LstmTrace {
  std::vector<std::vector<double>> inputs;
  std::vector<LstmStep> steps;
  const std::vector<double>& final_hidden() const { return steps.back().h; }
};

LstmTrace lstm_unroll(const LstmWeights& w, std::vector<std::vector<double>> inputs);
/// Backpropagation through time. `grad_hidden[t]` is dL/dh_t (may be empty
/// vectors for steps without a direct loss). Returns dL/dx_t per step.
std::vector<std::vector<double>> lstm_unroll_backward(
    const LstmTrace& trace, const LstmWeights& w,
    const std::vector<std::vector<double>>& grad_hidden, LstmGrads& grads);

double sigmoid(double v);

}  // namespace mfrbp::nn
