#pragma once

#include <cmath>
#include <cstdint>

namespace annuity {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ with per-stream seeding via splitmix64. Counter-based stream
/// derivation keeps path substreams independent of thread scheduling.
class Xoshiro256pp {
public:
    Xoshiro256pp() : Xoshiro256pp(0x853c49e6748fea9bULL) {}

    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    /// Substream `index` of a master seed; distinct indices give statistically
    /// independent generators.
    static Xoshiro256pp substream(std::uint64_t master, std::uint64_t index) {
        std::uint64_t sm = master;
        std::uint64_t a = splitmix64(sm);
        std::uint64_t mixed = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
        return Xoshiro256pp(splitmix64(mixed) ^ (mixed << 1));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on (0, 1].
    double next_uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform on (0, 1) leaving out both endpoints.
    double next_uniform_open() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
    }

    /// Exponential with rate `lambda` (mean 1/lambda).
    double next_exponential(double lambda) {
        return -std::log(next_uniform()) / lambda;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

namespace detail {

struct ZigguratTables {
    std::uint32_t kn[128];
    double wn[128];
    double fn[128];

    ZigguratTables() {
        const double m1 = 2147483648.0;
        double dn = 3.442619855899, tn = dn;
        const double vn = 9.91256303526217e-3;
        double q = vn / std::exp(-0.5 * dn * dn);
        kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
        kn[1] = 0;
        wn[0] = q / m1;
        wn[127] = dn / m1;
        fn[0] = 1.0;
        fn[127] = std::exp(-0.5 * dn * dn);
        for (int i = 126; i >= 1; --i) {
            dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
            kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
            tn = dn;
            fn[i] = std::exp(-0.5 * dn * dn);
            wn[i] = dn / m1;
        }
    }
};

inline const ZigguratTables& ziggurat_tables() {
    static const ZigguratTables t;
    return t;
}

}  // namespace detail

/// Standard normal draw via the 128-layer ziggurat.
inline double next_normal(Xoshiro256pp& rng) {
    const auto& t = detail::ziggurat_tables();
    const double r = 3.442619855899;
    for (;;) {
        const std::int32_t hz = static_cast<std::int32_t>(rng.next_u64() >> 32);
        const std::uint32_t iz = static_cast<std::uint32_t>(hz) & 127u;
        if (static_cast<std::uint32_t>(hz < 0 ? -static_cast<std::int64_t>(hz)
                                              : static_cast<std::int64_t>(hz)) < t.kn[iz])
            return hz * t.wn[iz];
        if (iz == 0) {
            // tail beyond r
            double x, y;
            do {
                x = -std::log(rng.next_uniform()) / r;
                y = -std::log(rng.next_uniform());
            } while (y + y < x * x);
            return hz > 0 ? r + x : -(r + x);
        }
        const double x = hz * t.wn[iz];
        if (t.fn[iz] + rng.next_uniform() * (t.fn[iz - 1] - t.fn[iz]) <
            std::exp(-0.5 * x * x))
            return x;
    }
}

}  // namespace annuity
