#pragma once

#include <complex>
#include <cstdint>

namespace gridstate {

/// Standard normal cumulative distribution function.
double normal_cdf(double x);

/// Inverse of the standard normal CDF. Rational approximation refined by one
/// Halley step against normal_cdf; accurate to ~1e-14 over (0,1).
double normal_quantile(double p);

/// Quantile of the chi-square distribution with 2 degrees of freedom at the
/// given probability (closed form: -2 ln(1 - p)).
double chi2_quantile_2dof(double p);

/// Deterministic random stream for Monte-Carlo work. Streams are derived from
/// a (master seed, stream index) pair so that repetition r of a campaign uses
/// the same draws regardless of how repetitions are distributed over workers.
///
/// The generator is splitmix64; normal variates are produced by inverse-CDF
/// transform so results do not depend on the standard library's distribution
/// implementations.
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

    std::uint64_t next_u64();

    /// Uniform draw in the open interval (0, 1) with 53-bit resolution.
    double uniform();

    double normal(double mean = 0.0, double stddev = 1.0);

    /// Circular complex Gaussian: independent real and imaginary parts, each
    /// with variance total_variance / 2.
    std::complex<double> circular_complex_normal(double total_variance);

  private:
    std::uint64_t state_;
};

}  // namespace gridstate
