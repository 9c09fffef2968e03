#include "cpv/nn/layers.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Core>

namespace cpv::nn {

std::string shape_string(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

struct ConvDims {
    int n, h, w, c, oh, ow, co;
    int rows() const { return n * oh * ow; }
    int patch() const { return kConvKernel * kConvKernel * c; }
};

template <typename T>
ConvDims check_conv(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    if (input.rank() != 4) throw ShapeError("conv2d: input must be [N,H,W,C], got " + shape_string(input.shape()));
    ConvDims d{input.dim(0), input.dim(1), input.dim(2), input.dim(3), 0, 0, 0};
    if (weight.rank() != 2 || weight.dim(0) != d.patch())
        throw ShapeError("conv2d: weight " + shape_string(weight.shape()) + " does not match " +
                         std::to_string(d.c) + " input channels");
    d.co = weight.dim(1);
    if (bias.rank() != 1 || bias.dim(0) != d.co) throw ShapeError("conv2d: bias must be [" + std::to_string(d.co) + "]");
    d.oh = conv_out_size(d.h);
    d.ow = conv_out_size(d.w);
    if (d.oh < 1 || d.ow < 1) throw ShapeError("conv2d: input too small");
    return d;
}

template <typename T>
void im2col(const Tensor<T>& input, const ConvDims& d, RowMat<T>& cols) {
    cols.setZero(d.rows(), d.patch());
    const T* in = input.data();
    for (int n = 0; n < d.n; ++n)
        for (int oy = 0; oy < d.oh; ++oy)
            for (int ox = 0; ox < d.ow; ++ox) {
                T* row = cols.data() + static_cast<std::ptrdiff_t>((n * d.oh + oy) * d.ow + ox) * d.patch();
                for (int ky = 0; ky < kConvKernel; ++ky) {
                    const int iy = oy * kConvStride - kConvPad + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    for (int kx = 0; kx < kConvKernel; ++kx) {
                        const int ix = ox * kConvStride - kConvPad + kx;
                        if (ix < 0 || ix >= d.w) continue;
                        const T* src = in + (static_cast<std::ptrdiff_t>(n * d.h + iy) * d.w + ix) * d.c;
                        std::copy(src, src + d.c, row + (ky * kConvKernel + kx) * d.c);
                    }
                }
            }
}

template <typename T>
void col2im(const RowMat<T>& cols, const ConvDims& d, Tensor<T>& grad_in) {
    T* out = grad_in.data();
    for (int n = 0; n < d.n; ++n)
        for (int oy = 0; oy < d.oh; ++oy)
            for (int ox = 0; ox < d.ow; ++ox) {
                const T* row = cols.data() + static_cast<std::ptrdiff_t>((n * d.oh + oy) * d.ow + ox) * d.patch();
                for (int ky = 0; ky < kConvKernel; ++ky) {
                    const int iy = oy * kConvStride - kConvPad + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    for (int kx = 0; kx < kConvKernel; ++kx) {
                        const int ix = ox * kConvStride - kConvPad + kx;
                        if (ix < 0 || ix >= d.w) continue;
                        T* dst = out + (static_cast<std::ptrdiff_t>(n * d.h + iy) * d.w + ix) * d.c;
                        const T* src = row + (ky * kConvKernel + kx) * d.c;
                        for (int c = 0; c < d.c; ++c) dst[c] += src[c];
                    }
                }
            }
}

template <typename T>
void check_linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    if (input.rank() != 2) throw ShapeError("linear: input must be [N,F], got " + shape_string(input.shape()));
    if (weight.rank() != 2 || weight.dim(0) != input.dim(1))
        throw ShapeError("linear: weight " + shape_string(weight.shape()) + " does not accept input " +
                         shape_string(input.shape()));
    if (bias.rank() != 1 || bias.dim(0) != weight.dim(1)) throw ShapeError("linear: bias does not match weight");
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    const ConvDims d = check_conv(input, weight, bias);
    RowMat<T> cols;
    im2col(input, d, cols);
    Tensor<T> out({d.n, d.oh, d.ow, d.co});
    MapMat<T> y(out.data(), d.rows(), d.co);
    ConstMapMat<T> w(weight.data(), d.patch(), d.co);
    Eigen::Map<const RowVec<T>> b(bias.data(), d.co);
    y.noalias() = cols * w;
    y.rowwise() += b;
    return out;
}

template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                          Tensor<T>& grad_weight, Tensor<T>& grad_bias, bool need_input_grad) {
    const ConvDims d = check_conv(input, weight, grad_bias);
    if (grad_out.shape() != Shape{d.n, d.oh, d.ow, d.co}) throw ShapeError("conv2d_backward: grad_out shape mismatch");
    if (grad_weight.shape() != weight.shape()) throw ShapeError("conv2d_backward: grad_weight shape mismatch");
    RowMat<T> cols;
    im2col(input, d, cols);
    ConstMapMat<T> dy(grad_out.data(), d.rows(), d.co);
    MapMat<T> dw(grad_weight.data(), d.patch(), d.co);
    Eigen::Map<RowVec<T>> db(grad_bias.data(), d.co);
    dw.noalias() += cols.transpose() * dy;
    db += dy.colwise().sum();
    if (!need_input_grad) return {};

    ConstMapMat<T> w(weight.data(), d.patch(), d.co);
    RowMat<T> dcols = dy * w.transpose();
    Tensor<T> grad_in(input.shape());
    col2im(dcols, d, grad_in);
    return grad_in;
}

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    check_linear(input, weight, bias);
    const int n = input.dim(0), fi = input.dim(1), fo = weight.dim(1);
    Tensor<T> out({n, fo});
    MapMat<T> y(out.data(), n, fo);
    y.noalias() = ConstMapMat<T>(input.data(), n, fi) * ConstMapMat<T>(weight.data(), fi, fo);
    y.rowwise() += Eigen::Map<const RowVec<T>>(bias.data(), fo);
    return out;
}

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                          Tensor<T>& grad_weight, Tensor<T>& grad_bias, bool need_input_grad) {
    check_linear(input, weight, grad_bias);
    const int n = input.dim(0), fi = input.dim(1), fo = weight.dim(1);
    if (grad_out.shape() != Shape{n, fo}) throw ShapeError("linear_backward: grad_out shape mismatch");
    ConstMapMat<T> x(input.data(), n, fi);
    ConstMapMat<T> dy(grad_out.data(), n, fo);
    MapMat<T>(grad_weight.data(), fi, fo).noalias() += x.transpose() * dy;
    Eigen::Map<RowVec<T>>(grad_bias.data(), fo) += dy.colwise().sum();
    if (!need_input_grad) return {};
    Tensor<T> grad_in({n, fi});
    MapMat<T>(grad_in.data(), n, fi).noalias() = dy * ConstMapMat<T>(weight.data(), fi, fo).transpose();
    return grad_in;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
    Tensor<T> out = input;
    for (auto& v : out.values()) v = v > T(0) ? v : T(0);
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
    if (output.shape() != grad_out.shape()) throw ShapeError("relu_backward: shape mismatch");
    Tensor<T> g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(output[i] > T(0))) g[i] = T(0);
    return g;
}

template <typename T>
CrossEntropyResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ShapeError("softmax_cross_entropy: logits must be [N,K]");
    const int n = logits.dim(0), k = logits.dim(1);
    if (static_cast<std::size_t>(n) != labels.size()) throw ShapeError("softmax_cross_entropy: label count mismatch");
    if (n == 0) throw ShapeError("softmax_cross_entropy: empty batch");
    CrossEntropyResult<T> res{T(0), Tensor<T>(logits.shape())};
    for (int i = 0; i < n; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= k) throw std::out_of_range("softmax_cross_entropy: label out of range");
        const T* z = logits.data() + static_cast<std::ptrdiff_t>(i) * k;
        T* g = res.grad.data() + static_cast<std::ptrdiff_t>(i) * k;
        const T zmax = *std::max_element(z, z + k);
        T sum = 0;
        for (int j = 0; j < k; ++j) sum += std::exp(z[j] - zmax);
        const T log_sum = std::log(sum);
        res.loss += -(z[label] - zmax - log_sum);
        for (int j = 0; j < k; ++j) g[j] = std::exp(z[j] - zmax - log_sum) / static_cast<T>(n);
        g[label] -= T(1) / static_cast<T>(n);
    }
    res.loss /= static_cast<T>(n);
    return res;
}

template <typename T>
void kaiming_uniform(Tensor<T>& weight, int fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : weight.values()) v = static_cast<T>(dist(rng));
}

#define CPV_INSTANTIATE_LAYERS(T)                                                                            \
    template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                 \
    template Tensor<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&,     \
                                       Tensor<T>&, bool);                                                    \
    template Tensor<T> linear_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                 \
    template Tensor<T> linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&,     \
                                       Tensor<T>&, bool);                                                    \
    template Tensor<T> relu_forward(const Tensor<T>&);                                                       \
    template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                    \
    template CrossEntropyResult<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>);            \
    template void kaiming_uniform(Tensor<T>&, int, Rng&);

CPV_INSTANTIATE_LAYERS(float)
CPV_INSTANTIATE_LAYERS(double)

#undef CPV_INSTANTIATE_LAYERS

}  // namespace cpv::nn
