#include "seqdetect/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "seqdetect/errors.hpp"

namespace seqdetect::specfun {

double log_gamma(double x) {
    if (!std::isfinite(x) || x <= 0.0) {
        throw DomainError("log_gamma: argument must be positive and finite, got " +
                          std::to_string(x));
    }
#if defined(__GLIBC__)
    // lgamma_r avoids the global `signgam` write of std::lgamma.
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

double volume_constant(int m) {
    if (m < 1) {
        throw DomainError("volume_constant: dimension must be >= 1, got " + std::to_string(m));
    }
    const double half = 0.5 * static_cast<double>(m);
    return std::exp(half * std::log(std::numbers::pi) - log_gamma(half + 1.0));
}

namespace {

// Series for W around the branch point in p = +-sqrt(2(e x + 1)); the sign of
// p selects the branch.
double branch_point_series(double p) {
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 +
           p * (-43.0 / 540.0 + p * (769.0 / 17280.0 + p * (-221.0 / 8505.0))))));
}

double initial_guess(LambertBranch branch, double x) {
    const double q = std::max(0.0, 2.0 * (std::numbers::e * x + 1.0));
    if (branch == LambertBranch::Principal) {
        if (x < -0.25) return branch_point_series(std::sqrt(q));
        if (x < 3.0) return std::log1p(x);
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        return l1 - l2 + l2 / l1;
    }
    if (x < -0.25) return branch_point_series(-std::sqrt(q));
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    return l1 - l2 + l2 / l1;
}

}  // namespace

double lambert_w(LambertBranch branch, double x) {
    if (std::isnan(x) || x < kBranchPoint) {
        throw DomainError("lambert_w: argument below -1/e: " + std::to_string(x));
    }
    if (branch == LambertBranch::Secondary && x >= 0.0) {
        throw DomainError("lambert_w: secondary branch requires x < 0, got " + std::to_string(x));
    }
    if (std::isinf(x)) {
        throw DomainError("lambert_w: argument must be finite");
    }
    if (x == kBranchPoint) return -1.0;
    if (x == 0.0) return 0.0;

    double w = initial_guess(branch, x);
    for (int iter = 0; iter < 64; ++iter) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double wp1 = w + 1.0;
        const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if (denom == 0.0 || !std::isfinite(denom)) break;
        const double step = f / denom;
        double next = w - step;
        // Keep iterates on the requested side of the branch point.
        if (branch == LambertBranch::Principal && next < -1.0) next = 0.5 * (w - 1.0);
        if (branch == LambertBranch::Secondary && next > -1.0) next = 0.5 * (w - 1.0);
        if (next == w) break;
        const bool converged = std::abs(next - w) <= 1e-15 * (1.0 + std::abs(next));
        w = next;
        if (converged) break;
    }
    return w;
}

}  // namespace seqdetect::specfun
