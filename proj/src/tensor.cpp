#include "cnet/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cnet {

int64_t Shape::numel() const {
    int64_t n = 1;
    for (int d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

std::string Shape::str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < dims.size(); ++i) {
        if (i) os << ",";
        os << dims[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(Shape s) : shape_(std::move(s)) {
    for (int d : shape_.dims) {
        if (d < 1) throw std::invalid_argument("Tensor: non-positive dim in shape " + shape_.str());
    }
    data_.assign(static_cast<size_t>(shape_.numel()), 0.0);
}

Tensor::Tensor(Shape s, double fill) : Tensor(std::move(s)) {
    this->fill(fill);
}

Tensor Tensor::scalar(double v) {
    Tensor t(Shape{1});
    t[0] = v;
    return t;
}

double Tensor::item() const {
    if (size() != 1) throw std::runtime_error("Tensor::item: tensor has " + std::to_string(size()) + " elements");
    return data_[0];
}

void Tensor::fill(double v) {
    for (auto& x : data_) x = v;
}

void check_finite(const Tensor& t, const char* op) {
    for (int64_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i])) {
            throw std::runtime_error(std::string(op) + ": non-finite value at index " + std::to_string(i));
        }
    }
}

}  // namespace cnet
