#pragma once

#include <cstdint>
#include <random>

namespace medoe {

// splitmix64, used to derive independent per-stream seeds from a master
// seed. Parallel and serial scene generation see identical streams because
// each stream depends only on (master, stream_id).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stream_id) {
    return std::mt19937_64(splitmix64(splitmix64(master) ^ stream_id));
}

} // namespace medoe
