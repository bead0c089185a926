#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seqdetect/knn_model.hpp"
#include "seqdetect/specfun.hpp"

namespace seqdetect {

/// Threshold calibration for a target false alarm rate.
struct Calibration {
    int m = 0;
    double v_m = 0.0;
    double d_alpha = 0.0;
    double phi = 0.0;
    double theta = 0.0;
    double omega0 = 0.0;
    std::optional<double> omega0_exact;  // cross-check, when computed
    double target_far = 0.0;
    double h = 0.0;
    double far_bound = 0.0;
    std::vector<std::string> warnings;
};

/// v_m * exp(-v_m * d_alpha^m).
double theta(double v_m, double d_alpha, int m);

/// Lambert branch that yields the non-trivial root for a given phi * theta:
/// Secondary below 1, Principal above. Throws DegenerateError at exactly 1.
specfun::LambertBranch nontrivial_branch(double phi_theta);

/// Non-trivial root of the small-baseline moment identity
///     exp((w - v_m) phi) = (w - v_m) / theta + 1,
/// i.e. w = v_m - theta - W(-phi theta exp(-phi theta)) / phi on the branch
/// that does not reproduce w = v_m.
double omega0_lambert(double v_m, double theta, double phi);

/// Positive root of the full moment equation
///     1 = integral_{-d_alpha^m}^{phi} exp(w y) v_m exp(-v_m d_alpha^m) exp(-v_m y) dy
/// by bracketing and bisection.
double omega0_exact(double v_m, double d_alpha, int m, double phi);

/// Same as omega0_exact with the baseline volume d_alpha^m given directly.
double omega0_exact_from_baseline(double v_m, double baseline, double phi);

/// The moment E[exp(w delta)] over [-baseline, phi] in closed form, minus 1.
double moment_residual(double omega, double v_m, double baseline, double phi);

/// h = -ln(target_far) / omega0.
double threshold_for_far(double target_far, double omega0);

/// exp(-omega0 h).
double far_bound(double h, double omega0);

/// Composes the above for a trained model. The exact root is computed as a
/// cross-check when d_alpha^m > 1e-8; a relative disagreement above 5% is
/// reported in `warnings`.
Calibration calibrate(const DetectorModel& model, double target_far);

}  // namespace seqdetect
