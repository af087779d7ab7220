#include "cnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace cnet::gradcheck {
namespace {

double rel_err(double a, double f) {
    return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-3});
}

}  // namespace

std::string Report::to_csv() const {
    std::ostringstream os;
    os << "param_group,max_rel_err,checked,pass\n";
    for (const auto& g : groups)
        os << g.name << "," << g.max_rel_err << "," << g.checked << "," << (g.pass ? "pass" : "fail") << "\n";
    return os.str();
}

Report grad_check(Model& model, int batch, uint64_t seed, double step, double tolerance, int samples_per_group) {
    if (step <= 0.0) throw std::invalid_argument("grad_check: step must be > 0");

    std::mt19937_64 data_rng(seed);
    Tensor x(model.input_shape(batch));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int64_t i = 0; i < x.size(); ++i) x[i] = noise(data_rng);
    std::vector<int> labels(static_cast<size_t>(batch));
    std::uniform_int_distribution<int> lab(0, model.num_classes() - 1);
    for (auto& l : labels) l = lab(data_rng);

    auto tensors = model.named_tensors();
    // Snapshot so repeated forwards (and this whole harness) leave running
    // statistics untouched.
    std::vector<Tensor> snapshot;
    for (auto& nt : tensors) snapshot.push_back(*nt.tensor);
    auto restore = [&] {
        for (size_t i = 0; i < tensors.size(); ++i) *tensors[i].tensor = snapshot[i];
    };

    const uint64_t forward_seed = seed ^ 0x9e3779b97f4a7c15ULL;
    auto run_forward = [&](autograd::Tape& tape, autograd::Value* input_out = nullptr) -> autograd::Value {
        restore();
        std::mt19937_64 fwd_rng(forward_seed);
        autograd::Value in = tape.leaf(x, "input");
        if (input_out) *input_out = in;
        autograd::Value out = model.forward(tape, in, /*training=*/true, fwd_rng);
        const Tensor& ov = tape.value(out);
        if (ov.rank() == 2 && ov.dim(1) == model.num_classes())
            return autograd::softmax_cross_entropy(tape, out, labels);
        return autograd::sum(tape, out);
    };

    // Analytic gradients from one tape.
    std::map<std::string, Tensor> analytic;
    Tensor input_grad(x.shape());
    {
        autograd::Tape tape;
        autograd::Value input;
        autograd::Value loss = run_forward(tape, &input);
        tape.backward(loss);
        for (auto& nt : tensors) {
            if (!nt.trainable) continue;
            const Tensor* g = tape.grad_for(nt.tensor);
            analytic.emplace(nt.name, g ? *g : Tensor(nt.tensor->shape()));
        }
        if (tape.has_grad(input)) input_grad = tape.grad(input);
    }

    auto loss_value = [&]() -> double {
        autograd::Tape tape;
        return tape.value(run_forward(tape)).item();
    };

    Report report;
    report.tolerance = tolerance;
    std::mt19937_64 pick_rng(seed + 1);
    for (size_t ti = 0; ti < tensors.size(); ++ti) {
        const auto& nt = tensors[ti];
        if (!nt.trainable) continue;
        GroupResult gr;
        gr.name = nt.name;
        // Perturb the snapshot: run_forward copies it into the live tensors,
        // so the perturbation survives the restore.
        Tensor& snap = snapshot[ti];
        const Tensor& ga = analytic.at(nt.name);

        std::vector<int64_t> order(static_cast<size_t>(snap.size()));
        for (int64_t i = 0; i < snap.size(); ++i) order[static_cast<size_t>(i)] = i;
        std::shuffle(order.begin(), order.end(), pick_rng);

        for (int64_t idx : order) {
            if (gr.checked >= samples_per_group) break;
            const double v = snap[idx];
            snap[idx] = v + step;
            const double lp = loss_value();
            snap[idx] = v - step;
            const double lm = loss_value();
            snap[idx] = v;
            const double fd = (lp - lm) / (2.0 * step);
            gr.max_rel_err = std::max(gr.max_rel_err, rel_err(ga[idx], fd));
            ++gr.checked;
        }
        gr.pass = gr.max_rel_err < tolerance;
        report.pass = report.pass && gr.pass;
        report.groups.push_back(gr);
    }

    // Input gradient, skipping entries near a ReLU kink (|x| < 10*step).
    {
        GroupResult gr;
        gr.name = "input";
        std::vector<int64_t> order(static_cast<size_t>(x.size()));
        for (int64_t i = 0; i < x.size(); ++i) order[static_cast<size_t>(i)] = i;
        std::shuffle(order.begin(), order.end(), pick_rng);
        for (int64_t idx : order) {
            if (gr.checked >= samples_per_group) break;
            const double v = x[idx];
            if (std::abs(v) < 10.0 * step) continue;
            x[idx] = v + step;
            const double lp = loss_value();
            x[idx] = v - step;
            const double lm = loss_value();
            x[idx] = v;
            const double fd = (lp - lm) / (2.0 * step);
            gr.max_rel_err = std::max(gr.max_rel_err, rel_err(input_grad[idx], fd));
            ++gr.checked;
        }
        gr.pass = gr.max_rel_err < tolerance;
        report.pass = report.pass && gr.pass;
        report.groups.push_back(gr);
    }
    restore();
    return report;
}

}  // namespace cnet::gradcheck
