#pragma once

#include <cstdint>

#include "koopcbf/netcore/network.hpp"

namespace koopcbf::netcore {

inline constexpr std::uint64_t kPowerIterationSeed = 0x5eed5eedULL;
inline constexpr int kPowerIterations = 100;

// Largest singular value of W by power iteration on W^T W from a seeded
// start vector. The estimate never decreases as `iters` grows. Returns 0
// for a zero matrix.
double spectral_norm(const RealMatrix& W, int iters = kPowerIterations,
                     std::uint64_t seed = kPowerIterationSeed);

// Power iteration that runs at least `min_iters` steps and then continues
// until the estimate stops changing (relative 1e-15) or `max_iters` is hit.
double spectral_norm_converged(const RealMatrix& W, int min_iters = kPowerIterations,
                               int max_iters = 20000, std::uint64_t seed = kPowerIterationSeed);

// Rescales each weight matrix to W / sigma(W) * target^(1/(L+1)), so the
// product of layer spectral norms (a Lipschitz bound for tanh nets) equals
// `target`. Biases are left alone.
void spectral_normalize(FeedforwardNet& net, double target);

// Product of per-layer spectral norms.
double lipschitz_upper_bound(const FeedforwardNet& net);

}  // namespace koopcbf::netcore
