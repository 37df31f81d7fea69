#include "mfmap/rng.hpp"

#include <cmath>

#include "mfmap/errors.hpp"

namespace mfmap {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
    std::uint64_t k = finalize(seed + kGolden);
    k = finalize(k ^ finalize(a + 2 * kGolden));
    k = finalize(k ^ finalize(b + 3 * kGolden));
    k = finalize(k ^ finalize(c + 4 * kGolden));
    return k;
}

std::uint64_t Rng::next_u64() {
    ++counter_;
    return finalize(key_ + counter_ * kGolden);
}

double Rng::uniform() {
    // (counter >> 11) spans 53 bits; offset by half an ulp to stay in (0, 1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    return next_u64() % n;
}

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::gamma(double shape) {
    if (shape < 1.0) {
        throw NumericalError("Rng::gamma requires shape >= 1");
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = uniform();
        double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Rng::chi_square(double dof) {
    return 2.0 * gamma(0.5 * dof);
}

double Rng::student_t(double dof) {
    double z = normal();
    double v = chi_square(dof);
    return z / std::sqrt(v / dof);
}

}  // namespace mfmap
