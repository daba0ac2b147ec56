#include "limbgo/rng.hpp"

namespace limbgo {

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

StreamFactory StreamFactory::trial(std::uint64_t k) const { return StreamFactory(mix64(seed_ ^ mix64(k))); }

RandomStream StreamFactory::stream(std::string_view purpose, std::string_view marker, int axis) const {
    std::uint64_t s = mix64(seed_ ^ fnv1a64(purpose));
    s = mix64(s ^ fnv1a64(marker));
    s = mix64(s ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(axis)));
    return RandomStream(s);
}

}  // namespace limbgo
