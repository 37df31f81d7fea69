#pragma once

#include <cstdint>

namespace mfmap {

// Counter-based pseudo-random stream built on the splitmix64 finalizer.
// A stream is identified by a key derived from (seed, stream labels); the
// k-th output depends only on (key, k), so streams are reproducible across
// runs and thread counts. Substreams for replicates, batches, etc. are
// derived with `substream`.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    /// Derive a stream key from a seed and up to three labels.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a = 0,
                                std::uint64_t b = 0, std::uint64_t c = 0);

    Rng substream(std::uint64_t label) const { return Rng(derive(key_, label)); }

    std::uint64_t next_u64();

    /// Uniform in the open interval (0, 1).
    double uniform();

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal (Box-Muller, cosine branch).
    double normal();

    /// Gamma(shape, 1) for shape >= 1 (Marsaglia-Tsang squeeze).
    double gamma(double shape);

    /// Chi-square with dof degrees of freedom (dof >= 2 required here).
    double chi_square(double dof);

    /// Student-t with dof > 2, via the normal / chi-square ratio.
    double student_t(double dof);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Named sub-stream labels so all randomness hangs off one seed.
namespace stream {
inline constexpr std::uint64_t kGenerator = 1;
inline constexpr std::uint64_t kBatching = 2;
inline constexpr std::uint64_t kSampling = 3;
inline constexpr std::uint64_t kTest = 99;
}  // namespace stream

}  // namespace mfmap
