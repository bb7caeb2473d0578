#pragma once

#include <cstdint>
#include <vector>

namespace densecrab {

/// Dense row-major tensor. Values are doubles; tensors that are persisted
/// (model parameters) are kept on the float32 grid so the 32-bit on-disk
/// encoding round-trips bit-exactly.
struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<double> v;

    Tensor() = default;

    static Tensor zeros(std::vector<std::uint32_t> dims);

    std::size_t count() const { return v.size(); }

    double* row(std::size_t r) { return v.data() + r * dims[1]; }
    const double* row(std::size_t r) const { return v.data() + r * dims[1]; }

    std::uint32_t rows() const { return dims[0]; }
    std::uint32_t cols() const { return dims[1]; }
};

bool same_shape(const Tensor& a, const Tensor& b);

/// Snaps every value to the nearest float32.
void quantize_f32(Tensor& t);

}  // namespace densecrab
