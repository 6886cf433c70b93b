#include "ksmc/rng.hpp"

#include <cmath>

namespace ksmc {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxBlock philox4x32(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                       std::uint32_t c3, std::uint64_t key) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c0, hi0, lo0);
        mulhilo(kMul1, c2, hi1, lo1);
        std::uint32_t n0 = hi1 ^ c1 ^ k0;
        std::uint32_t n1 = lo1;
        std::uint32_t n2 = hi0 ^ c3 ^ k1;
        std::uint32_t n3 = lo0;
        c0 = n0; c1 = n1; c2 = n2; c3 = n3;
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return PhiloxBlock{{c0, c1, c2, c3}};
}

namespace {

inline PhiloxBlock block_for(std::uint64_t seed, RngDomain d, std::uint64_t t,
                             std::uint64_t p, std::uint64_t draw) {
    // Counter layout: (draw, particle, time, domain ^ high halves).
    // High halves of the 64-bit indices are folded into the domain word so
    // indices above 2^32 still address distinct blocks.
    std::uint32_t c0 = static_cast<std::uint32_t>(draw);
    std::uint32_t c1 = static_cast<std::uint32_t>(p);
    std::uint32_t c2 = static_cast<std::uint32_t>(t);
    std::uint32_t c3 = static_cast<std::uint32_t>(d) ^
                       (static_cast<std::uint32_t>(draw >> 32) * 0x85EBCA6Bu) ^
                       (static_cast<std::uint32_t>(p >> 32) * 0xC2B2AE35u) ^
                       (static_cast<std::uint32_t>(t >> 32) * 0x27D4EB2Fu);
    return philox4x32(c0, c1, c2, c3, seed);
}

inline double u53(std::uint32_t a, std::uint32_t b) {
    std::uint64_t m = (static_cast<std::uint64_t>(b & 0x1FFFFFu) << 32) | a;
    return static_cast<double>(m) * (1.0 / 9007199254740992.0);  // 2^-53
}

}  // namespace

double RngStream::uniform(RngDomain d, std::uint64_t t, std::uint64_t p,
                          std::uint64_t draw) const {
    PhiloxBlock blk = block_for(seed_, d, t, p, draw);
    return u53(blk.x[0], blk.x[1]);
}

double RngStream::normal(RngDomain d, std::uint64_t t, std::uint64_t p,
                         std::uint64_t draw) const {
    PhiloxBlock blk = block_for(seed_, d, t, p, draw);
    // u1 shifted into (0, 1] so the log is finite.
    std::uint64_t m1 = (static_cast<std::uint64_t>(blk.x[1] & 0x1FFFFFu) << 32) | blk.x[0];
    double u1 = static_cast<double>(m1 + 1) * (1.0 / 9007199254740992.0);
    double u2 = u53(blk.x[2], blk.x[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace ksmc
