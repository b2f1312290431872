#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "nss/errors.hpp"

namespace nss {

// Dense row-major n-dimensional array. Production code uses float32
// (Tensor); the double instantiation exists for verification paths such as
// finite-difference gradient checks.
template <typename T>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(checked_numel(shape_), T(0));
    }

    TensorT(std::vector<int> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_numel(shape_) != data_.size()) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape product " +
                             std::to_string(checked_numel(shape_)));
        }
    }

    static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }

    const std::vector<int>& shape() const { return shape_; }
    int dim(size_t i) const { return shape_[i]; }
    size_t rank() const { return shape_.size(); }
    size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    T& operator[](size_t i) { return data_[i]; }
    T operator[](size_t i) const { return data_[i]; }

    // Batched view helpers: row `b` of a [batch, ...] tensor.
    size_t row_size() const { return shape_.empty() ? 0 : numel() / static_cast<size_t>(shape_[0]); }
    T* row(size_t b) { return data_.data() + b * row_size(); }
    const T* row(size_t b) const { return data_.data() + b * row_size(); }

    bool all_finite() const {
        for (T v : data_) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

    static size_t checked_numel(const std::vector<int>& shape) {
        size_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw ShapeError("non-positive dimension " + std::to_string(d));
            n *= static_cast<size_t>(d);
        }
        return n;
    }

private:
    std::vector<int> shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;

inline std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace nss
