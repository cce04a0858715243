#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace gelx {

// Philox4x64-10 counter-based generator. Output stream matches
// numpy.random.Philox for the same key and counter (numpy bumps the
// counter before each block, and so do we).
class Philox4x64 {
public:
    using result_type = std::uint64_t;
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    explicit Philox4x64(std::uint64_t seed = 0, std::uint64_t stream = 0)
        : key_{seed, stream} {}
    Philox4x64(Key key, Counter counter) : key_(key), ctr_(counter) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 4) {
            bump();
            block_ = block(ctr_, key_);
            pos_ = 0;
        }
        return block_[pos_++];
    }

    static Counter block(Counter c, Key k) {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                k[0] += 0x9E3779B97F4A7C15ULL;
                k[1] += 0xBB67AE8584CAA73BULL;
            }
            unsigned __int128 p0 = static_cast<unsigned __int128>(0xD2E7470EE14C6C93ULL) * c[0];
            unsigned __int128 p1 = static_cast<unsigned __int128>(0xCA5A826395121157ULL) * c[2];
            auto hi0 = static_cast<std::uint64_t>(p0 >> 64), lo0 = static_cast<std::uint64_t>(p0);
            auto hi1 = static_cast<std::uint64_t>(p1 >> 64), lo1 = static_cast<std::uint64_t>(p1);
            c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        }
        return c;
    }

private:
    void bump() {
        for (auto& w : ctr_)
            if (++w != 0) break;
    }

    Key key_;
    Counter ctr_{0, 0, 0, 0};
    Counter block_{};
    int pos_ = 4;
};

// Seed for replication `rep` of experiment cell `cell`, independent of
// evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t cell, std::uint64_t rep) {
    return Philox4x64::block({rep, cell, 0x6765786eULL, 0}, {seed, 0x5eedULL})[0];
}

// uniform on (0, 1), never exactly 0 or 1
template <class Urbg>
double uniform_open(Urbg& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

template <class Urbg>
class NormalSampler {
public:
    double operator()(Urbg& rng) {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double r = std::sqrt(-2.0 * std::log(uniform_open(rng)));
        double a = 2.0 * std::numbers::pi * uniform_open(rng);
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gelx
