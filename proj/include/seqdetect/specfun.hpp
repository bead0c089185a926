#pragma once

namespace seqdetect::specfun {

/// Natural log of the gamma function for x > 0.
double log_gamma(double x);

/// Volume of the unit ball in `m` dimensions, pi^(m/2) / Gamma(m/2 + 1).
/// Assembled in log space so large `m` underflows gracefully to 0 instead of
/// overflowing the gamma function.
double volume_constant(int m);

enum class LambertBranch {
    Principal,  // W0: x >= -1/e, W >= -1
    Secondary,  // W-1: -1/e <= x < 0, W <= -1
};

/// Real Lambert W: the w on `branch` with w * exp(w) == x.
///
/// Halley iteration started from the branch-point series near x = -1/e and
/// from the logarithmic asymptote elsewhere. Throws DomainError outside the
/// branch's domain.
double lambert_w(LambertBranch branch, double x);

/// -1/e rounded to double; the common left end of both real branches.
inline constexpr double kBranchPoint = -0.36787944117144233;

}  // namespace seqdetect::specfun
