#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tamrl/training/model.hpp"

namespace tamrl {

// Binary checkpoint, little-endian:
//   magic "TAMRLCKP", u32 version, u64 config hash, u64 seed,
//   u64 pretrain_epochs, u64 joint_epochs, u64 steps,
//   u64 tensor count, then per tensor: u32 name length, name, u32 rank,
//   u64 extents..., f64 data...
//   u64 optimizer slot count, then per slot: i64 step, f64 lr/beta1/beta2/eps,
//   m and v as unnamed tensors.
// Loading fills a structurally identical model built from the same
// architecture; names and shapes must match exactly.

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'T', 'A', 'M', 'R', 'L', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace ckpt_detail {

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const std::string& source) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw DataError(source + ": truncated checkpoint");
    return v;
}

inline void put_tensor(std::ostream& out, const Tensor& t) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
}

inline void read_tensor_into(std::istream& in, Tensor& target, const std::string& what, const std::string& source) {
    const auto rank = get<std::uint32_t>(in, source);
    if (rank > 8) throw DataError(source + ": corrupt tensor header for " + what);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>(in, source));
    if (shape != target.shape()) {
        throw DataError(source + ": tensor " + what + " has shape " + shape_str(shape) + ", model expects " +
                        shape_str(target.shape()));
    }
    in.read(reinterpret_cast<char*>(target.data()), static_cast<std::streamsize>(target.size() * sizeof(double)));
    if (!in) throw DataError(source + ": truncated checkpoint");
}

}  // namespace ckpt_detail

template <ParamPack Pack>
std::size_t param_count_tensors(const Pack& p) {
    return tensor_refs(p).size();
}

template <BaseNetwork P>
void write_checkpoint(std::ostream& out, const ModelState<P>& state, std::uint64_t config_hash) {
    using namespace ckpt_detail;
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, config_hash);
    put<std::uint64_t>(out, state.seed);
    put<std::uint64_t>(out, state.pretrain_epochs);
    put<std::uint64_t>(out, state.joint_epochs);
    put<std::uint64_t>(out, state.steps);
    put<std::uint64_t>(out, param_count_tensors(state.params));
    state.params.for_each_tensor([&](const std::string& name, const Tensor& t) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_tensor(out, t);
    });
    put<std::uint64_t>(out, state.optimizer.size());
    for (const auto& s : state.optimizer) {
        put<std::int64_t>(out, s.step);
        put<double>(out, s.hyper.lr);
        put<double>(out, s.hyper.beta1);
        put<double>(out, s.hyper.beta2);
        put<double>(out, s.hyper.eps);
        put_tensor(out, s.m);
        put_tensor(out, s.v);
    }
}

/// Reads into a copy of `like` (which fixes the architecture). Rejects a
/// config-hash mismatch.
template <BaseNetwork P>
ModelState<P> read_checkpoint(std::istream& in, const ModelState<P>& like, std::uint64_t expected_hash,
                              const std::string& source = "checkpoint") {
    using namespace ckpt_detail;
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw DataError(source + ": not a checkpoint file");
    const auto version = get<std::uint32_t>(in, source);
    if (version != kCheckpointVersion) throw DataError(source + ": unsupported checkpoint version " + std::to_string(version));
    const auto hash = get<std::uint64_t>(in, source);
    if (hash != expected_hash) {
        throw ConfigError(source + ": checkpoint was written under a different configuration (config hash mismatch)");
    }
    ModelState<P> state = like;
    state.seed = get<std::uint64_t>(in, source);
    state.pretrain_epochs = static_cast<std::size_t>(get<std::uint64_t>(in, source));
    state.joint_epochs = static_cast<std::size_t>(get<std::uint64_t>(in, source));
    state.steps = static_cast<std::size_t>(get<std::uint64_t>(in, source));
    const auto count = get<std::uint64_t>(in, source);
    auto refs = tensor_refs(state.params);
    auto names = tensor_names(state.params);
    if (count != refs.size()) {
        throw DataError(source + ": checkpoint holds " + std::to_string(count) + " tensors, model has " +
                        std::to_string(refs.size()));
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto len = get<std::uint32_t>(in, source);
        if (len > 4096) throw DataError(source + ": corrupt tensor name");
        std::string name(len, '\0');
        in.read(name.data(), len);
        if (!in) throw DataError(source + ": truncated checkpoint");
        if (name != names[i]) throw DataError(source + ": expected tensor " + names[i] + ", found " + name);
        read_tensor_into(in, *refs[i], name, source);
    }
    const auto slots = get<std::uint64_t>(in, source);
    if (slots != 0 && slots != refs.size()) throw DataError(source + ": optimizer state does not match parameters");
    state.optimizer.clear();
    for (std::size_t i = 0; i < slots; ++i) {
        AdamState s;
        s.step = get<std::int64_t>(in, source);
        s.hyper.lr = get<double>(in, source);
        s.hyper.beta1 = get<double>(in, source);
        s.hyper.beta2 = get<double>(in, source);
        s.hyper.eps = get<double>(in, source);
        s.m = zeros_like(*refs[i]);
        s.v = zeros_like(*refs[i]);
        read_tensor_into(in, s.m, "adam.m/" + names[i], source);
        read_tensor_into(in, s.v, "adam.v/" + names[i], source);
        state.optimizer.push_back(std::move(s));
    }
    return state;
}

template <BaseNetwork P>
void save_checkpoint(const std::string& path, const ModelState<P>& state, std::uint64_t config_hash) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(path + ": cannot write checkpoint");
    write_checkpoint(out, state, config_hash);
    if (!out) throw DataError(path + ": write failed");
}

template <BaseNetwork P>
ModelState<P> load_checkpoint(const std::string& path, const ModelState<P>& like, std::uint64_t expected_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open checkpoint");
    return read_checkpoint(in, like, expected_hash, path);
}

}  // namespace tamrl
