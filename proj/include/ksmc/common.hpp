#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ksmc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Thrown by model constructors on bad shapes or non-positive noise intensities.
struct invalid_model : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a state, weight, or gain stops being finite. Carries enough
// context to locate the offending step in a long campaign.
struct numeric_overflow : std::runtime_error {
    long time_index;
    long particle;
    int inner_k;
    numeric_overflow(const std::string& what, long t, long p, int k)
        : std::runtime_error(what + " (time_index=" + std::to_string(t) +
                             ", particle=" + std::to_string(p) +
                             ", inner_k=" + std::to_string(k) + ")"),
          time_index(t), particle(p), inner_k(k) {}
};

// Config file / CLI argument problems.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Statistical routines that need a minimum sample count.
struct insufficient_data : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Observation geometry degenerate (e.g. range sensor sitting on the target).
struct singular_geometry : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File IO failures surfaced to the CLI.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw invalid_model(msg);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw invalid_model(msg);
}

// FNV-1a, used for config hashes in run manifests. Stability across runs is
// all that matters here, not collision resistance.
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace ksmc
