#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace cnet {

// Shape of a dense tensor. Activations use (N, C, H, W), convolution
// weights (C_out, C_in, K_h, K_w).
struct Shape {
    std::vector<int> dims;

    Shape() = default;
    Shape(std::initializer_list<int> d) : dims(d) {}
    explicit Shape(std::vector<int> d) : dims(std::move(d)) {}

    int rank() const { return static_cast<int>(dims.size()); }
    int operator[](int i) const { return dims[static_cast<size_t>(i)]; }
    int64_t numel() const;
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

// Dense tensor of 64-bit floats, row-major in the order of Shape.dims.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape s);
    Tensor(Shape s, double fill);

    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
    static Tensor full(Shape s, double v) { return Tensor(std::move(s), v); }
    static Tensor scalar(double v);

    const Shape& shape() const { return shape_; }
    int rank() const { return shape_.rank(); }
    int dim(int i) const { return shape_[i]; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // 4-d accessors for NCHW / OIHW tensors.
    double& at4(int a, int b, int c, int d) {
        return data_[static_cast<size_t>(idx4(a, b, c, d))];
    }
    double at4(int a, int b, int c, int d) const {
        return data_[static_cast<size_t>(idx4(a, b, c, d))];
    }
    double& at2(int a, int b) {
        return data_[static_cast<size_t>(int64_t(a) * shape_[1] + b)];
    }
    double at2(int a, int b) const {
        return data_[static_cast<size_t>(int64_t(a) * shape_[1] + b)];
    }

    double item() const;  // value of a one-element tensor

    void fill(double v);
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

private:
    int64_t idx4(int a, int b, int c, int d) const {
        return ((int64_t(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d;
    }

    Shape shape_;
    std::vector<double> data_;
};

// Throws std::runtime_error naming `op` if any entry is NaN or Inf.
void check_finite(const Tensor& t, const char* op);

}  // namespace cnet
