#pragma once

#include <array>
#include <cstdint>

namespace qlink::rng {

// Philox4x32-10 counter-based generator. A stream is addressed by
// (seed, stream_id); draws within a stream advance a 128-bit counter, so any
// (stream, draw-index) pair maps to the same output no matter how work is
// split across threads.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> round10(std::array<std::uint32_t, 4> ctr,
                                                std::array<std::uint32_t, 2> key);
};

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    bool bernoulli(double p);

    // Index in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);

    // Geometric number of failures before the first success, success
    // probability p in (0, 1]. Inverse-transform; saturates at huge values.
    std::uint64_t geometric_failures(double p);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> block_{};
    int cursor_ = 4;  // forces refill on first draw
};

}  // namespace qlink::rng
