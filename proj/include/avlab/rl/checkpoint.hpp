#pragma once

// Versioned policy checkpoint.
//
// Layout (all integers and floats little-endian):
//   magic        8 bytes  "AVLABPOL"
//   version      u32      kCheckpointVersion
//   algorithm    8 bytes  NUL-padded tag ("ppo", "sac")
//   seed         u64
//   config_hash  u64
//   layer count  u32      number of entries in dims
//   dims         u32 * layer count
//   action dim   u32
//   action scale f64 * action dim
//   param count  u64
//   parameters   f64 * param count, layer by layer (weights column-major, then bias)

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avlab/errors.hpp"
#include "avlab/rl/mlp.hpp"
#include "avlab/rl/policy.hpp"

namespace avlab::rl {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::array<char, 8> kCheckpointMagic{'A', 'V', 'L', 'A', 'B', 'P', 'O', 'L'};

struct PolicyCheckpoint {
    std::string algorithm;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    GaussianPolicy policy;
};

namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    std::array<unsigned char, sizeof(T)> bytes;
    if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw IoError("checkpoint: truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

} // namespace detail

inline void write_checkpoint(std::ostream& os, const PolicyCheckpoint& ck) {
    if (ck.algorithm.size() > 8) throw UsageError("checkpoint: algorithm tag longer than 8 bytes");
    os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    detail::put_le<std::uint32_t>(os, kCheckpointVersion);
    std::array<char, 8> tag{};
    std::memcpy(tag.data(), ck.algorithm.data(), ck.algorithm.size());
    os.write(tag.data(), tag.size());
    detail::put_le<std::uint64_t>(os, ck.seed);
    detail::put_le<std::uint64_t>(os, ck.config_hash);
    const auto& dims = ck.policy.net().dims();
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(dims.size()));
    for (int d : dims) detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    const Eigen::VectorXd& scale = ck.policy.action_scale();
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(scale.size()));
    for (Eigen::Index i = 0; i < scale.size(); ++i) detail::put_le<double>(os, scale(i));
    const Eigen::VectorXd& p = ck.policy.net().parameters();
    detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) detail::put_le<double>(os, p(i));
}

inline PolicyCheckpoint read_checkpoint(std::istream& is) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kCheckpointMagic)
        throw IoError("checkpoint: not a policy checkpoint (bad magic)");
    const auto version = detail::get_le<std::uint32_t>(is);
    if (version != kCheckpointVersion)
        throw IoError("checkpoint: unsupported format version " + std::to_string(version));
    std::array<char, 8> tag{};
    if (!is.read(tag.data(), tag.size())) throw IoError("checkpoint: truncated file");
    PolicyCheckpoint ck;
    ck.algorithm.assign(tag.data(), strnlen(tag.data(), tag.size()));
    ck.seed = detail::get_le<std::uint64_t>(is);
    ck.config_hash = detail::get_le<std::uint64_t>(is);
    const auto n_dims = detail::get_le<std::uint32_t>(is);
    if (n_dims < 2 || n_dims > 64) throw IoError("checkpoint: implausible layer count");
    std::vector<int> dims(n_dims);
    for (auto& d : dims) {
        d = static_cast<int>(detail::get_le<std::uint32_t>(is));
        if (d < 1 || d > (1 << 20)) throw IoError("checkpoint: implausible layer dimension");
    }
    const auto n_act = detail::get_le<std::uint32_t>(is);
    if (n_act < 1 || n_act > 64) throw IoError("checkpoint: implausible action dimension");
    Eigen::VectorXd scale(n_act);
    for (std::uint32_t i = 0; i < n_act; ++i) scale(i) = detail::get_le<double>(is);
    Mlp net(dims);
    const auto n_params = detail::get_le<std::uint64_t>(is);
    if (n_params != static_cast<std::uint64_t>(net.parameter_count()))
        throw IoError("checkpoint: parameter count does not match layer dimensions");
    for (Eigen::Index i = 0; i < net.parameter_count(); ++i) net.parameters()(i) = detail::get_le<double>(is);
    try {
        ck.policy = GaussianPolicy(std::move(net), std::move(scale));
    } catch (const ConfigError& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
    return ck;
}

inline void save_checkpoint(const std::string& path, const PolicyCheckpoint& ck) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    write_checkpoint(os, ck);
    if (!os) throw IoError("failed writing checkpoint: " + path);
}

inline PolicyCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    try {
        return read_checkpoint(is);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

} // namespace avlab::rl
