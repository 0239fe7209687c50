#ifndef BOPASK_CORE_HPP
#define BOPASK_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bopask {

// ---------------------------------------------------------------------------
// Errors. Each pipeline stage throws its own exception type carrying a
// machine-checkable code; messages are for humans.
// ---------------------------------------------------------------------------

enum class IngestCode { missing, shape, unknown_model, bad_pose };
enum class WorldFrameCode { no_depth, degenerate };
enum class GeometryCode { behind_camera };
enum class PlanCode { start_in_collision, goal_in_collision, no_path };
enum class GraspCode { no_candidates };
enum class SynthCode { camera_pose, unknown_fixture };
enum class EvalCode { join };

namespace detail {
template <typename Code>
class CodedError : public std::runtime_error {
public:
    CodedError(Code code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};
}  // namespace detail

using IngestError = detail::CodedError<IngestCode>;
using WorldFrameError = detail::CodedError<WorldFrameCode>;
using GeometryError = detail::CodedError<GeometryCode>;
using PlanError = detail::CodedError<PlanCode>;
using GraspError = detail::CodedError<GraspCode>;
using SynthError = detail::CodedError<SynthCode>;
using EvalError = detail::CodedError<EvalCode>;

class CliError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG. std::uniform_*_distribution is implementation-defined,
// so every random draw in the pipeline goes through this fixed-algorithm
// generator (splitmix64) to keep outputs byte-identical across toolchains.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Order-sensitive mix of seed material (scene/frame/instance ids etc.).
inline std::uint64_t mix_seed(std::uint64_t a) {
    std::uint64_t s = a;
    return splitmix64(s);
}

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
    std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + b);
    return mix_seed(splitmix64(s), rest...);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // Warm up so small seeds diverge immediately.
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
    std::uint64_t uniform_int(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // Box-Muller, two draws per call, no cached state.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Small numeric helpers shared across modules.
// ---------------------------------------------------------------------------

inline double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty range");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    std::nth_element(values.begin(), values.begin() + mid - 1, values.begin() + mid);
    return 0.5 * (values[mid - 1] + upper);
}

inline double deg2rad(double deg) { return deg * M_PI / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / M_PI; }

}  // namespace bopask

#endif  // BOPASK_CORE_HPP
