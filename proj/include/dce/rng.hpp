#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace dce {

/// Seedable random source with fixed, explicitly implemented transforms:
/// mt19937_64 engine, Box-Muller normals, Marsaglia-Tsang gammas. The
/// standard library distributions are implementation-defined, so they are
/// not used; with these transforms a given seed produces the same stream
/// on any conforming platform (up to libm rounding).
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1).
    double uniform()
    {
        for (;;) {
            const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
            if (u > 0.0)
                return u;
        }
    }

    /// Standard normal via Box-Muller; the sine partner is cached.
    double normal()
    {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Gamma(shape, scale) via Marsaglia-Tsang squeeze; shapes below one
    /// use the boost X = Gamma(shape+1) * U^(1/shape).
    double gamma(double shape, double scale)
    {
        if (shape <= 0.0 || scale <= 0.0)
            throw std::domain_error("gamma: shape and scale must be positive");
        if (shape < 1.0)
            return gamma(shape + 1.0, scale) * std::pow(uniform(), 1.0 / shape);
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v * scale;
        }
    }

    /// Inverse gamma with density proportional to x^-(shape+1) exp(-scale/x);
    /// mean scale/(shape-1) for shape > 1. Drawn as the reciprocal of a
    /// Gamma(shape, 1/scale) variate.
    double inverse_gamma(double shape, double scale)
    {
        return 1.0 / gamma(shape, 1.0 / scale);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace dce
