#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "codlab/error.hpp"

namespace codlab {

// Dense row-major tensor of doubles, rank 0..3. Rank 0 is a scalar with one
// element. Shapes use positive extents; size() == product of extents.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(static_cast<size_t>(count_), 0.0);
    }

    Tensor(std::vector<int> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        check(static_cast<size_t>(count_) == data_.size(), "ShapeMismatch",
              "tensor data length " + std::to_string(data_.size()) +
                  " does not match shape size " + std::to_string(count_));
    }

    static Tensor scalar(double v) {
        Tensor t;
        t.count_ = 1;
        t.data_ = {v};
        return t;
    }

    static Tensor zeros_like(const Tensor& other) {
        Tensor t;
        t.shape_ = other.shape_;
        t.count_ = other.count_;
        t.data_.assign(other.data_.size(), 0.0);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int size() const { return count_; }
    bool is_scalar() const { return shape_.empty(); }

    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int rows() const { return shape_.size() >= 1 ? shape_[0] : 1; }
    int cols() const { return shape_.size() >= 2 ? shape_[1] : 1; }

    double& operator[](int i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int i) const { return data_[static_cast<size_t>(i)]; }

    double& at2(int r, int c) { return data_[static_cast<size_t>(r) * cols() + c]; }
    double at2(int r, int c) const { return data_[static_cast<size_t>(r) * cols() + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& flat() const { return data_; }

    double item() const {
        check(count_ == 1, "ShapeMismatch", "item() on non-scalar tensor");
        return data_[0];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Tensor& operator+=(const Tensor& other) {
        check(same_shape(other), "ShapeMismatch", "+= on mismatched shapes");
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

private:
    void validate_shape() {
        check(shape_.size() <= 3, "ShapeMismatch", "rank > 3 not supported");
        long long n = 1;
        for (int d : shape_) {
            check(d > 0, "ShapeMismatch", "non-positive dimension in shape");
            n *= d;
        }
        count_ = static_cast<int>(n);
    }

    std::vector<int> shape_;       // empty = scalar
    std::vector<double> data_ = {0.0};
    int count_ = 1;
};

} // namespace codlab
