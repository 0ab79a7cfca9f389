#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace trackae {

// Dense row-major double tensor, rank <= 3. Sequence data uses the layout
// [batch, channels, length].
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s)
        : shape(std::move(s)), data(numel_of(shape), 0.0) {}
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {}

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    // Row pointer for [B, C, L] tensors.
    double* row(std::size_t b, std::size_t c) { return data.data() + (b * shape[1] + c) * shape[2]; }
    const double* row(std::size_t b, std::size_t c) const {
        return data.data() + (b * shape[1] + c) * shape[2];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

} // namespace trackae
