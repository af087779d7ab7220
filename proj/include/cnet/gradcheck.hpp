#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cnet/model.hpp"

namespace cnet::gradcheck {

struct GroupResult {
    std::string name;
    double max_rel_err = 0.0;
    int checked = 0;
    bool pass = true;
};

struct Report {
    std::vector<GroupResult> groups;
    double tolerance = 0.0;
    bool pass = true;
    std::string to_csv() const;  // param_group,max_rel_err,checked,pass
};

// Central finite differences against the tape gradients. The loss is
// softmax cross entropy when the model emits (N, num_classes) logits and a
// plain sum otherwise. Per group at most samples_per_group entries are
// probed; entries closer than 10*step to a ReLU kink candidate (|value| <
// 10*step) are skipped. Model state is restored afterwards.
Report grad_check(Model& model, int batch, uint64_t seed, double step = 1e-5,
                  double tolerance = 1e-6, int samples_per_group = 16);

// Adapter for checking a single layer or op without a full network.
class FunctionalModel : public Model {
public:
    using ForwardFn = std::function<autograd::Value(autograd::Tape&, autograd::Value, bool, std::mt19937_64&)>;

    FunctionalModel(Shape input_shape_chw, int classes, ForwardFn fn, std::vector<NamedTensor> tensors)
        : chw_(std::move(input_shape_chw)), classes_(classes), fn_(std::move(fn)), tensors_(std::move(tensors)) {}

    autograd::Value forward(autograd::Tape& t, autograd::Value x, bool training, std::mt19937_64& rng) override {
        return fn_(t, x, training, rng);
    }
    void collect(std::vector<NamedTensor>& out) override {
        out.insert(out.end(), tensors_.begin(), tensors_.end());
    }
    int64_t count_parameters(ParamBreakdown* breakdown = nullptr) const override {
        (void)breakdown;
        int64_t n = 0;
        for (const auto& t : tensors_)
            if (t.trainable) n += t.tensor->size();
        return n;
    }
    int num_classes() const override { return classes_; }
    Shape input_shape(int batch) const override {
        std::vector<int> dims{batch};
        dims.insert(dims.end(), chw_.dims.begin(), chw_.dims.end());
        return Shape(dims);
    }

private:
    Shape chw_;
    int classes_;
    ForwardFn fn_;
    std::vector<NamedTensor> tensors_;
};

}  // namespace cnet::gradcheck
