#include "qlink/rng.hpp"

#include <cmath>
#include <limits>

namespace qlink::rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::round10(std::array<std::uint32_t, 4> ctr,
                                                 std::array<std::uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

Stream::Stream(std::uint64_t seed, std::uint64_t stream_id) {
    key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    counter_ = {0, 0, static_cast<std::uint32_t>(stream_id),
                static_cast<std::uint32_t>(stream_id >> 32)};
}

void Stream::refill() {
    block_ = Philox4x32::round10(counter_, key_);
    // 64-bit increment of the low counter half; the high half carries the
    // stream id and never changes.
    if (++counter_[0] == 0) ++counter_[1];
    cursor_ = 0;
}

std::uint32_t Stream::next_u32() {
    if (cursor_ >= 4) refill();
    return block_[cursor_++];
}

std::uint64_t Stream::next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
}

double Stream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool Stream::bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
}

std::uint64_t Stream::uniform_index(std::uint64_t n) {
    if (n <= 1) return 0;
    // Rejection-free multiply-shift; bias < 2^-64 is irrelevant here.
    const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
}

std::uint64_t Stream::geometric_failures(double p) {
    if (p >= 1.0) return 0;
    const double u = 1.0 - uniform();  // in (0, 1]
    const double g = std::floor(std::log(u) / std::log1p(-p));
    if (!(g >= 0.0)) return 0;
    if (g >= 9.0e18) return std::numeric_limits<std::uint64_t>::max() / 2;
    return static_cast<std::uint64_t>(g);
}

}  // namespace qlink::rng
