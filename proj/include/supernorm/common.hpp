#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace supernorm {

// Error taxonomy shared with the CLI exit codes: DataError -> 2 (bad input,
// broken invariants, malformed files), NumericError -> 3 (non-convergence,
// domain violations). Usage errors are handled by the CLI parser itself.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Deterministic random stream. mt19937_64 is fully specified by the standard,
// and all value derivation below avoids std::*_distribution (whose outputs are
// implementation-defined), so identical seeds give identical streams on every
// platform. That property backs the byte-identical report contract.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    // uniform in [0, 1), 53-bit resolution
    double uniform() {
        return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller; draws exactly two words per call
    double normal() {
        double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
        double u2 = static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // uniform integer in [0, n)
    int below(int n) {
        if (n <= 0) throw DataError("RandomStream::below requires n > 0");
        return static_cast<int>(gen_() % static_cast<std::uint64_t>(n));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(below(i + 1))]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace supernorm
