#include "lrc/seeding.hpp"

namespace lrc {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index,
                          std::uint64_t sub_index) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ fnv1a64(stream));
  s = splitmix64(s ^ index);
  return splitmix64(s ^ (sub_index * 0xd1342543de82ef95ULL));
}

}  // namespace lrc
