#include "densecrab/tensor.hpp"

namespace densecrab {

Tensor Tensor::zeros(std::vector<std::uint32_t> dims) {
    Tensor t;
    std::size_t count = 1;
    for (std::uint32_t d : dims) count *= d;
    t.dims = std::move(dims);
    t.v.assign(count, 0.0);
    return t;
}

bool same_shape(const Tensor& a, const Tensor& b) {
    return a.dims == b.dims;
}

void quantize_f32(Tensor& t) {
    for (double& x : t.v) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace densecrab
