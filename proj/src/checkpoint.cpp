#include "disco/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "disco/wire.hpp"

namespace disco {

namespace {
constexpr char kCkptMagic[] = "DISCOCKPT1";
constexpr size_t kMagicLen = 10;
}  // namespace

void save_checkpoint(const NamedParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kCkptMagic, kMagicLen);
    wire::write_u64(out, params.size());
    for (const auto& [name, tensor] : params) {
        if (name.size() > 0xFFFF) throw std::runtime_error("parameter name too long: " + name);
        wire::write_u16(out, static_cast<uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        wire::write_u32(out, static_cast<uint32_t>(tensor.rank()));
        for (const int e : tensor.shape()) wire::write_u64(out, static_cast<uint64_t>(e));
        for (const double v : tensor.data()) wire::write_f64(out, v);
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

void load_checkpoint(const NamedParams& params, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[kMagicLen];
    in.read(magic, kMagicLen);
    if (!in || std::memcmp(magic, kCkptMagic, kMagicLen) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path);
    const uint64_t count = wire::read_u64(in);
    if (count != params.size())
        throw std::runtime_error("checkpoint holds " + std::to_string(count) +
                                 " tensors, model expects " + std::to_string(params.size()));

    std::set<std::string> seen;
    for (uint64_t t = 0; t < count; ++t) {
        const uint16_t name_len = wire::read_u16(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const uint32_t rank = wire::read_u32(in);
        std::vector<int> shape(rank);
        size_t numel = 1;
        for (uint32_t r = 0; r < rank; ++r) {
            shape[r] = static_cast<int>(wire::read_u64(in));
            numel *= static_cast<size_t>(shape[r]);
        }
        if (!in) throw std::runtime_error("truncated checkpoint: " + path);
        if (!seen.insert(name).second)
            throw std::runtime_error("duplicate tensor in checkpoint: " + name);

        const Tensor* target = nullptr;
        for (const auto& [pname, tensor] : params)
            if (pname == name) target = &tensor;
        if (!target) throw std::runtime_error("checkpoint tensor unknown to model: " + name);
        if (target->shape() != shape)
            throw std::runtime_error("shape mismatch for tensor " + name);

        std::vector<double>& data = const_cast<Tensor*>(target)->data();
        for (size_t i = 0; i < numel; ++i) data[i] = wire::read_f64(in);
        if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    }
}

}  // namespace disco
