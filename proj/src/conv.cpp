#include "tascom/conv.hpp"

#include <stdexcept>

namespace tascom {

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride) {
    const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t cout = weight.dim(0), k = weight.dim(2);
    if (weight.dim(1) != cin) throw std::invalid_argument("conv2d: channel mismatch");
    if (h < k || w < k) throw std::invalid_argument("conv2d: input smaller than kernel");
    const std::size_t oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
    Tensor out({cout, oh, ow});
    for (std::size_t oc = 0; oc < cout; ++oc) {
        double* oplane = out.data() + oc * oh * ow;
        const double b = bias[oc];
        for (std::size_t i = 0; i < oh * ow; ++i) oplane[i] = b;
        for (std::size_t ic = 0; ic < cin; ++ic) {
            const double* iplane = input.data() + ic * h * w;
            const double* kern = weight.data() + (oc * cin + ic) * k * k;
            for (std::size_t oy = 0; oy < oh; ++oy) {
                double* orow = oplane + oy * ow;
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const double* irow = iplane + (oy * stride + ky) * w;
                    const double* krow = kern + ky * k;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const double* ipix = irow + ox * stride;
                        double s = 0.0;
                        for (std::size_t kx = 0; kx < k; ++kx) s += ipix[kx] * krow[kx];
                        orow[ox] += s;
                    }
                }
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor& input, const Tensor& weight, std::size_t stride, const Tensor& grad_out,
                     Tensor* grad_input, Tensor& grad_weight, Tensor& grad_bias) {
    const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t cout = weight.dim(0), k = weight.dim(2);
    const std::size_t oh = grad_out.dim(1), ow = grad_out.dim(2);
    for (std::size_t oc = 0; oc < cout; ++oc) {
        const double* gplane = grad_out.data() + oc * oh * ow;
        double gb = 0.0;
        for (std::size_t i = 0; i < oh * ow; ++i) gb += gplane[i];
        grad_bias[oc] += gb;
        for (std::size_t ic = 0; ic < cin; ++ic) {
            const double* iplane = input.data() + ic * h * w;
            double* gkern = grad_weight.data() + (oc * cin + ic) * k * k;
            const double* kern = weight.data() + (oc * cin + ic) * k * k;
            double* giplane = grad_input ? grad_input->data() + ic * h * w : nullptr;
            for (std::size_t oy = 0; oy < oh; ++oy) {
                const double* grow = gplane + oy * ow;
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const double* irow = iplane + (oy * stride + ky) * w;
                    double* girow = giplane ? giplane + (oy * stride + ky) * w : nullptr;
                    double* gkrow = gkern + ky * k;
                    const double* krow = kern + ky * k;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const double g = grow[ox];
                        if (g == 0.0) continue;
                        const double* ipix = irow + ox * stride;
                        for (std::size_t kx = 0; kx < k; ++kx) gkrow[kx] += g * ipix[kx];
                        if (girow) {
                            double* gipix = girow + ox * stride;
                            for (std::size_t kx = 0; kx < k; ++kx) gipix[kx] += g * krow[kx];
                        }
                    }
                }
            }
        }
    }
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& pre_activation, const Tensor& grad_out) {
    require_same_shape(pre_activation, grad_out, "relu_backward");
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (pre_activation[i] <= 0.0) g[i] = 0.0;
    }
    return g;
}

Tensor gap(const Tensor& x) {
    const std::size_t c = x.dim(0), n = x.dim(1) * x.dim(2);
    Tensor out({c});
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* plane = x.data() + ch * n;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += plane[i];
        out[ch] = s / static_cast<double>(n);
    }
    return out;
}

Tensor gap_backward(const Tensor& x_shape_source, const Tensor& grad_out) {
    const std::size_t c = x_shape_source.dim(0), n = x_shape_source.dim(1) * x_shape_source.dim(2);
    Tensor g(x_shape_source.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double v = grad_out[ch] / static_cast<double>(n);
        double* plane = g.data() + ch * n;
        for (std::size_t i = 0; i < n; ++i) plane[i] = v;
    }
    return g;
}

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t n = w.dim(0), m = w.dim(1);
    if (x.size() != n) throw std::invalid_argument("linear_forward: input size mismatch");
    Tensor y({m});
    for (std::size_t j = 0; j < m; ++j) y[j] = b[j];
    for (std::size_t i = 0; i < n; ++i) {
        const double xv = x[i];
        const double* wrow = w.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) y[j] += xv * wrow[j];
    }
    return y;
}

void linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor* grad_x, Tensor& grad_w,
                     Tensor& grad_b) {
    const std::size_t n = w.dim(0), m = w.dim(1);
    for (std::size_t j = 0; j < m; ++j) grad_b[j] += grad_out[j];
    for (std::size_t i = 0; i < n; ++i) {
        const double xv = x[i];
        double* gwrow = grad_w.data() + i * m;
        const double* wrow = w.data() + i * m;
        double gx = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            gwrow[j] += xv * grad_out[j];
            gx += wrow[j] * grad_out[j];
        }
        if (grad_x) (*grad_x)[i] += gx;
    }
}

} // namespace tascom
