#pragma once

#include <cmath>
#include <cstdint>

namespace rotwin {

namespace detail {

// SplitMix64 finalizer (Stafford mix13): full-avalanche 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

} // namespace detail

// Derive a child stream key from a parent seed and a stream index.
// Used for per-replicate and per-subject substreams, so generated data
// is identical regardless of worker count or scheduling.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
    return detail::mix64(detail::mix64(seed + detail::kGolden) ^
                         detail::mix64(stream * detail::kGolden + 0x5851f42d4c957f2dULL));
}

// Counter-based 64-bit generator: output i is mix64(key + i*golden).
// Cheap to seed, cheap to split, reproducible by construction.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(derive_stream(seed, stream)) {}

    std::uint64_t next_u64() {
        return detail::mix64(key_ + (++counter_) * detail::kGolden);
    }

    // Uniform on the open interval (0,1); never returns 0 or 1, so logs are safe.
    double uniform01() {
        const std::uint64_t bits = next_u64() >> 11; // 53 random bits
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = uniform01();
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 6.283185307179586476925286766559 * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Gamma(shape, rate) by Marsaglia-Tsang squeeze; shape < 1 via the
    // boost Gamma(shape+1) * U^{1/shape}.
    double gamma(double shape, double rate) {
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
        }
    }

    // One-sided positive stable variate with Laplace transform exp(-t^alpha),
    // alpha in (0,1]; Chambers-Mallows-Stuck / Kanter sampler.
    double positive_stable(double alpha) {
        if (alpha >= 1.0) return 1.0;
        const double theta = uniform(0.0, 3.14159265358979323846);
        const double w = exponential(1.0);
        const double a = std::sin(alpha * theta) / std::pow(std::sin(theta), 1.0 / alpha);
        const double b = std::pow(std::sin((1.0 - alpha) * theta) / w, (1.0 - alpha) / alpha);
        return a * b;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace rotwin
