#pragma once

#include "tascom/tensor.hpp"

namespace tascom {

// 2-D convolution, valid padding. Input {cin,h,w}, weight {cout,cin,k,k},
// bias {cout}, output {cout,(h-k)/stride+1,(w-k)/stride+1}.
Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride);

// Accumulates into grad_weight/grad_bias; writes grad_input if non-null.
void conv2d_backward(const Tensor& input, const Tensor& weight, std::size_t stride, const Tensor& grad_out,
                     Tensor* grad_input, Tensor& grad_weight, Tensor& grad_bias);

Tensor relu(const Tensor& x);
// grad_in = grad_out where pre_activation > 0 else 0.
Tensor relu_backward(const Tensor& pre_activation, const Tensor& grad_out);

// Global average pool {c,h,w} -> {c}.
Tensor gap(const Tensor& x);
Tensor gap_backward(const Tensor& x_shape_source, const Tensor& grad_out);

// y = x * w + b with x {n}, w {n,m}, b {m}.
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);
void linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor* grad_x, Tensor& grad_w,
                     Tensor& grad_b);

} // namespace tascom
