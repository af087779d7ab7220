#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cnet/autograd.hpp"
#include "cnet/tensor.hpp"

namespace cnet {

// A named piece of model state. Trainable tensors receive gradients and
// optimizer updates; the rest (batchnorm running stats) is carried state.
struct NamedTensor {
    std::string name;
    Tensor* tensor = nullptr;
    bool trainable = false;
};

using ParamBreakdown = std::vector<std::pair<std::string, int64_t>>;

class Model {
public:
    virtual ~Model() = default;

    virtual autograd::Value forward(autograd::Tape& t, autograd::Value x,
                                    bool training, std::mt19937_64& rng) = 0;
    virtual void collect(std::vector<NamedTensor>& out) = 0;

    // Analytic parameter count computed from the configuration alone,
    // never by walking the allocated tensors.
    virtual int64_t count_parameters(ParamBreakdown* breakdown = nullptr) const = 0;

    virtual int num_classes() const = 0;
    virtual Shape input_shape(int batch) const = 0;

    std::vector<NamedTensor> named_tensors() {
        std::vector<NamedTensor> out;
        collect(out);
        return out;
    }
    std::vector<NamedTensor> parameters() {
        std::vector<NamedTensor> out;
        for (auto& nt : named_tensors())
            if (nt.trainable) out.push_back(nt);
        return out;
    }
    // Sum of allocated trainable tensor sizes; the oracle count_parameters
    // is checked against.
    int64_t enumerate_parameters() {
        int64_t n = 0;
        for (auto& p : parameters()) n += p.tensor->size();
        return n;
    }
};

}  // namespace cnet
