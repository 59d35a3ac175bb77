#ifndef DSD_COMMON_HPP
#define DSD_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dsd {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ShapeError : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};
struct TimestepError : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};
struct MissingFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CorruptFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VersionMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Seeded generator with a serializable state. Normal draws use Box-Muller
// without caching so the engine state alone captures the full RNG state.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // uniform integer in [lo, hi] inclusive
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(eng_() % span);
    }

    double uniform() {
        return (eng_() >> 11) * (1.0 / 9007199254740992.0);  // 53-bit mantissa
    }

    double normal() {
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    std::string state() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }
    void set_state(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
        if (is.fail()) throw CorruptFileError("rng state parse failure");
    }

    // derive an independent stream (for per-clip / per-step seeding)
    Rng fork() { return Rng(eng_()); }

private:
    std::mt19937_64 eng_;
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace dsd

#endif
