#pragma once

#include <map>
#include <string>
#include <vector>

#include "cnet/model.hpp"
#include "cnet/tensor.hpp"

namespace cnet::checkpoint {

// Binary checkpoint: magic "CNCK", u32 version, the config text that built
// the model, and every named tensor (trainable weights plus carried state
// like batchnorm running stats) as raw little-endian f64.
struct Checkpoint {
    std::string config_text;
    std::vector<std::string> order;  // tensor names in file order
    std::map<std::string, Tensor> tensors;
};

void save(const std::string& path, const Checkpoint& ckpt);
Checkpoint load(const std::string& path);

// Snapshot of all named tensors plus any extra tensors (channel stats etc.).
Checkpoint capture(Model& model, const std::string& config_text,
                   const std::map<std::string, Tensor>& extra = {});

// Copies checkpoint tensors into the model; every model tensor must be
// present with a matching shape.
void restore(Model& model, const Checkpoint& ckpt);

}  // namespace cnet::checkpoint
