#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lrc {

/// Named-stream seed splitting. A stream is identified by (master seed, name,
/// index...), so adding a new consumer never shifts the draws of existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0,
                          std::uint64_t sub_index = 0);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// FNV-1a over raw bytes; used for config hashes in run manifests.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace lrc
