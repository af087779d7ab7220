#include "cnet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cnet::checkpoint {
namespace {

constexpr char kMagic[4] = {'C', 'N', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void write_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

uint64_t read_u64(std::istream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

std::string read_string(std::istream& in, uint64_t len) {
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return s;
}

}  // namespace

void save(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u64(out, ckpt.config_text.size());
    out.write(ckpt.config_text.data(), static_cast<std::streamsize>(ckpt.config_text.size()));
    write_u64(out, ckpt.order.size());
    for (const auto& name : ckpt.order) {
        auto it = ckpt.tensors.find(name);
        if (it == ckpt.tensors.end())
            throw std::runtime_error("checkpoint: tensor '" + name + "' listed in order but missing");
        const Tensor& t = it->second;
        write_u64(out, name.size());
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(out, static_cast<uint32_t>(t.shape().rank()));
        for (int d = 0; d < t.shape().rank(); ++d) write_u32(out, static_cast<uint32_t>(t.dim(d)));
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size()) * static_cast<std::streamsize>(sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const uint32_t version = read_u32(in);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.config_text = read_string(in, read_u64(in));
    const uint64_t count = read_u64(in);
    for (uint64_t i = 0; i < count; ++i) {
        const std::string name = read_string(in, read_u64(in));
        const uint32_t rank = read_u32(in);
        std::vector<int> dims(rank);
        for (uint32_t d = 0; d < rank; ++d) dims[d] = static_cast<int>(read_u32(in));
        Tensor t{Shape{dims}};
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size()) * static_cast<std::streamsize>(sizeof(double)));
        if (!in) throw std::runtime_error("checkpoint: truncated tensor data for '" + name + "'");
        ckpt.order.push_back(name);
        ckpt.tensors.emplace(name, std::move(t));
    }
    return ckpt;
}

Checkpoint capture(Model& model, const std::string& config_text, const std::map<std::string, Tensor>& extra) {
    Checkpoint ckpt;
    ckpt.config_text = config_text;
    for (const auto& nt : model.named_tensors()) {
        ckpt.order.push_back(nt.name);
        ckpt.tensors.emplace(nt.name, *nt.tensor);
    }
    for (const auto& [name, t] : extra) {
        if (ckpt.tensors.count(name))
            throw std::runtime_error("checkpoint: extra tensor '" + name + "' collides with model state");
        ckpt.order.push_back(name);
        ckpt.tensors.emplace(name, t);
    }
    return ckpt;
}

void restore(Model& model, const Checkpoint& ckpt) {
    for (auto& nt : model.named_tensors()) {
        auto it = ckpt.tensors.find(nt.name);
        if (it == ckpt.tensors.end())
            throw std::runtime_error("checkpoint: missing tensor '" + nt.name + "'");
        if (!(it->second.shape() == nt.tensor->shape()))
            throw std::runtime_error("checkpoint: shape mismatch for '" + nt.name + "' (file " +
                                     it->second.shape().str() + ", model " + nt.tensor->shape().str() + ")");
        *nt.tensor = it->second;
    }
}

}  // namespace cnet::checkpoint
