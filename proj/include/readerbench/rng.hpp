#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace rbench {

// Derives an independent 64-bit seed for a named stream. All randomness in
// the project fans out from one root seed through this function so that
// parallel and serial runs draw identical numbers.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t root, std::string_view stream, std::uint64_t index = 0)
        : engine_(derive_seed(root, stream, index)) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::size_t below(std::size_t n) {
        std::uniform_int_distribution<std::size_t> dist(0, n - 1);
        return dist(engine_);
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        std::normal_distribution<double> dist(mean, sd);
        return dist(engine_);
    }

    // Index drawn from a discrete distribution given by `weights` (need not
    // be normalized).
    std::size_t categorical(std::span<const double> weights);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace rbench
