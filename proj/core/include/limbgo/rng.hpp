#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace limbgo {

/// 64-bit FNV-1a hash.
std::uint64_t fnv1a64(std::string_view text);

/// SplitMix64 finalizer; a bijective mixer over 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// A deterministic generator dedicated to one purpose.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double normal(double mean, double stddev) { return std::normal_distribution<double>(mean, stddev)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Splittable seed tree: every (purpose, marker, axis) key gets its own
/// independent stream, so switching one noise source on or off never shifts
/// the draws of another.
class StreamFactory {
public:
    explicit StreamFactory(std::uint64_t seed) : seed_(seed) {}

    /// Child factory for trial k.
    StreamFactory trial(std::uint64_t k) const;

    RandomStream stream(std::string_view purpose, std::string_view marker = {}, int axis = -1) const;

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace limbgo
