#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "edlm/error.hpp"

namespace edlm {

inline std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ')';
    return out.str();
}

/// Dense row-major tensor. All extents are >= 1 and the flat storage length
/// always equals the product of the extents.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(checked_volume(shape_), T(0));
    }

    Tensor(std::vector<int> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_volume(shape_) != data_.size())
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_to_string(shape_));
    }

    static Tensor full(std::vector<int> shape, T value) {
        Tensor t(std::move(shape));
        for (auto& v : t.data_) v = value;
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    int rank() const { return static_cast<int>(shape_.size()); }
    std::size_t size() const { return data_.size(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& operator()(int i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator()(int i) const { return data_[static_cast<std::size_t>(i)]; }

    T& operator()(int i, int j) { return data_[offset(i, j)]; }
    const T& operator()(int i, int j) const { return data_[offset(i, j)]; }

    T& operator()(int i, int j, int k) { return data_[offset(i, j, k)]; }
    const T& operator()(int i, int j, int k) const { return data_[offset(i, j, k)]; }

    T& operator()(int i, int j, int k, int l) { return data_[offset(i, j, k, l)]; }
    const T& operator()(int i, int j, int k, int l) const { return data_[offset(i, j, k, l)]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// Reinterprets the contents under a new shape of equal volume.
    Tensor reshaped(std::vector<int> shape) const {
        if (checked_volume(shape) != data_.size())
            throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " +
                             shape_to_string(shape));
        return Tensor(std::move(shape), data_);
    }

private:
    std::size_t offset(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
               static_cast<std::size_t>(j);
    }
    std::size_t offset(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(shape_[2]) +
               static_cast<std::size_t>(k);
    }
    std::size_t offset(int i, int j, int k, int l) const {
        return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
                 static_cast<std::size_t>(j)) *
                    static_cast<std::size_t>(shape_[2]) +
                static_cast<std::size_t>(k)) *
                   static_cast<std::size_t>(shape_[3]) +
               static_cast<std::size_t>(l);
    }

    static std::size_t checked_volume(const std::vector<int>& shape) {
        if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
        std::size_t volume = 1;
        for (int e : shape) {
            if (e < 1)
                throw ShapeError("tensor extents must be >= 1, got " + shape_to_string(shape));
            volume *= static_cast<std::size_t>(e);
        }
        return volume;
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

/// Convolution window geometry. Output extent follows
/// floor((in + 2*padding - kernel) / stride) + 1.
struct ConvGeometry {
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    int padding = 0;

    void validate() const {
        if (kernel_h < 1 || kernel_w < 1 || stride < 1 || padding < 0)
            throw ShapeError("invalid conv geometry: kernel " + std::to_string(kernel_h) + "x" +
                             std::to_string(kernel_w) + ", stride " + std::to_string(stride) +
                             ", padding " + std::to_string(padding));
    }

    int out_extent(int in, int kernel) const {
        const int span = in + 2 * padding - kernel;
        if (span < 0) return 0;  // window does not fit at all
        return span / stride + 1;
    }
};

}  // namespace edlm
