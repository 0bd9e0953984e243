// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vanast {

// Error taxonomy mirrored by the CLI exit codes.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ClientError : std::runtime_error {
    explicit ClientError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ull);
uint64_t fnv1a64(const std::string& s);

// Stable seed derivation: mixes a base seed with a tag so independent
// streams never alias.
uint64_t derive_seed(uint64_t base, const std::string& tag);
uint64_t splitmix64(uint64_t& state);

// Deterministic RNG. Gaussian draws use Box-Muller on two uniforms and keep
// no cached state, so serialization is just the engine state.
class Rng {
public:
    Rng() : eng_(0x9e3779b97f4a7c15ull) {}
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }
    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // uniform integer in [lo, hi] inclusive
    int64_t uniform_int(int64_t lo, int64_t hi);
    float normal();

    std::string serialize() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }
    void deserialize(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
        if (!is) throw ConfigError("bad rng state string");
    }

private:
    std::mt19937_64 eng_;
};

std::string base64_encode(const uint8_t* data, size_t len);
std::vector<uint8_t> base64_decode(const std::string& s);

std::vector<std::string> split_ws(const std::string& s);
std::string lowercase(std::string s);

// Shortest round-trip float formatting (CSV fidelity).
std::string float_to_string(float v);
std::string double_to_string(double v);

}  // namespace vanast
