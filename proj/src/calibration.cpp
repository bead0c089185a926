#include "seqdetect/calibration.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "seqdetect/errors.hpp"

namespace seqdetect {

namespace {

void require_positive(double value, const char* name) {
    if (!std::isfinite(value) || value <= 0.0) {
        throw DomainError(std::string(name) + " must be positive and finite");
    }
}

}  // namespace

double theta(double v_m, double d_alpha, int m) {
    require_positive(v_m, "v_m");
    if (!std::isfinite(d_alpha) || d_alpha < 0.0) throw DomainError("d_alpha must be non-negative");
    if (m < 1) throw DomainError("m must be >= 1");
    return v_m * std::exp(-v_m * std::pow(d_alpha, m));
}

specfun::LambertBranch nontrivial_branch(double phi_theta) {
    if (std::abs(phi_theta - 1.0) <= 1e-12) {
        throw DegenerateError("calibration degenerate: phi * theta = 1 gives a double root");
    }
    // W = -phi*theta is the trivial preimage; it sits on the principal branch
    // when phi*theta < 1 and on the secondary branch when phi*theta > 1.
    return phi_theta < 1.0 ? specfun::LambertBranch::Secondary : specfun::LambertBranch::Principal;
}

double omega0_lambert(double v_m, double theta, double phi) {
    require_positive(v_m, "v_m");
    require_positive(theta, "theta");
    require_positive(phi, "phi");
    if (theta > v_m) throw DomainError("theta must not exceed v_m");

    const double pt = phi * theta;
    const auto branch = nontrivial_branch(pt);
    const double arg = std::max(-pt * std::exp(-pt), specfun::kBranchPoint);
    const double w = specfun::lambert_w(branch, arg);

    const double x = -theta - w / phi;
    if (!(std::abs(x) > 1e-9)) {
        throw DegenerateError("calibration degenerate: Lambert root coincides with the trivial root");
    }
    const double omega = (v_m - theta) - w / phi;
    if (!(omega > 1e-12)) {
        std::ostringstream msg;
        msg << "calibration degenerate: omega0 = " << omega << " is not above 1e-12";
        throw DegenerateError(msg.str());
    }
    return omega;
}

double moment_residual(double omega, double v_m, double baseline, double phi) {
    // E[exp(w delta)] = v_m exp(-w b) (exp(x L) - 1) / x with x = w - v_m and
    // L = phi + b, written with expm1 so it stays accurate as x -> 0.
    const double x = omega - v_m;
    const double span = phi + baseline;
    const double integral = x == 0.0 ? span : std::expm1(x * span) / x;
    return v_m * std::exp(-omega * baseline) * integral - 1.0;
}

double omega0_exact_from_baseline(double v_m, double baseline, double phi) {
    require_positive(v_m, "v_m");
    require_positive(phi, "phi");
    if (!std::isfinite(baseline) || baseline < 0.0) throw DomainError("baseline must be non-negative");

    const auto g = [&](double w) { return moment_residual(w, v_m, baseline, phi); };

    // The moment generating function is convex with g(0) < 0, so there is one
    // positive root; the lower end stays off w = 0.
    double lo = 1e-12;
    if (!(g(lo) < 0.0)) throw DegenerateError("no nontrivial root: root lies below 1e-12");
    double hi = v_m + 50.0 / phi;
    for (int i = 0; i < 200 && !(g(hi) > 0.0); ++i) hi *= 2.0;
    if (!(g(hi) > 0.0)) throw DegenerateError("no nontrivial root: no sign change in bracket");

    for (int i = 0; i < 4000; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid);
        if (gm == 0.0) return mid;
        (gm < 0.0 ? lo : hi) = mid;
    }
    const double root = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
    if (!(std::abs(g(root)) <= 1e-10)) {
        throw DegenerateError("no nontrivial root: bisection residual " + std::to_string(g(root)));
    }
    return root;
}

double omega0_exact(double v_m, double d_alpha, int m, double phi) {
    if (!std::isfinite(d_alpha) || d_alpha < 0.0) throw DomainError("d_alpha must be non-negative");
    if (m < 1) throw DomainError("m must be >= 1");
    return omega0_exact_from_baseline(v_m, std::pow(d_alpha, m), phi);
}

double threshold_for_far(double target_far, double omega0) {
    if (!(target_far > 0.0 && target_far < 1.0)) throw DomainError("target false alarm rate must lie in (0, 1)");
    require_positive(omega0, "omega0");
    return -std::log(target_far) / omega0;
}

double far_bound(double h, double omega0) {
    if (!(h >= 0.0) || !std::isfinite(h)) throw DomainError("threshold h must be non-negative");
    require_positive(omega0, "omega0");
    return std::exp(-omega0 * h);
}

Calibration calibrate(const DetectorModel& model, double target_far) {
    model.validate();
    if (!(target_far > 0.0 && target_far < 1.0)) throw DomainError("target false alarm rate must lie in (0, 1)");

    Calibration c;
    c.m = model.m;
    c.v_m = specfun::volume_constant(model.m);
    c.d_alpha = model.d_alpha;
    c.phi = model.phi;
    c.theta = theta(c.v_m, model.d_alpha, model.m);
    c.omega0 = omega0_lambert(c.v_m, c.theta, c.phi);
    c.target_far = target_far;
    c.h = threshold_for_far(target_far, c.omega0);
    c.far_bound = far_bound(c.h, c.omega0);

    const double baseline = model.baseline();
    if (baseline > 1e-8) {
        try {
            c.omega0_exact = omega0_exact_from_baseline(c.v_m, baseline, c.phi);
            const double rel = std::abs(*c.omega0_exact - c.omega0) / *c.omega0_exact;
            if (rel > 0.05) {
                std::ostringstream msg;
                msg << "asymptotic omega0 " << c.omega0 << " differs from the exact root " << *c.omega0_exact
                    << " by " << 100.0 * rel << "% (d_alpha^m = " << baseline << " is not small)";
                c.warnings.push_back(msg.str());
            }
        } catch (const DegenerateError& e) {
            c.warnings.push_back(std::string("exact cross-check unavailable: ") + e.what());
        }
    }
    return c;
}

}  // namespace seqdetect
