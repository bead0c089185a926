#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "seqdetect/feature_io.hpp"

namespace seqdetect::sim {

struct SimConfig {
    int m = 2;
    double intensity = 1.0;      // Poisson points per unit volume
    std::size_t n_samples = 1;   // trials, or Monte Carlo runs
    std::uint64_t seed = 0;
    double h = 0.0;
    double omega0 = 0.0;
    std::size_t max_steps = 0;   // 0 selects 100 * exp(omega0 * h)

    void validate() const;
    std::size_t horizon() const;
};

/// P(nearest neighbour within r) = 1 - exp(-intensity * v_m * r^m).
double nn_distance_cdf(double r, int m, double intensity = 1.0);

struct NnSample {
    std::vector<double> distances;
    std::size_t redraws = 0;  // empty realisations that were drawn again
    double cube_side = 0.0;
};

/// Distance from the origin to the nearest point of a homogeneous Poisson
/// process, one realisation per trial. The process lives in a cube of side
/// 2 r* where P(NN <= r*) = 1 - 1e-6. Refuses m > 10.
NnSample sample_nn_distances(const SimConfig& config);

/// delta = E / v_m - d_alpha^m with E ~ Exp(1). With `truncate_at`, draws
/// above it are rejected and drawn again.
std::vector<double> sample_delta(double d_alpha, int m, std::size_t count, std::uint64_t seed,
                                 std::optional<double> truncate_at = std::nullopt);

struct FarEstimate {
    double mean_period = 0.0;  // frames until the first crossing of h
    double std_error = 0.0;
    std::size_t n_runs = 0;
    double bound_period = 0.0;  // exp(omega0 h)
    bool bound_satisfied = false;
    std::size_t censored = 0;  // runs stopped at the horizon, counted as the horizon
};

/// Monte Carlo mean time to false alarm of the CUSUM recursion driven by
/// i.i.d. sample_delta() draws. Run r uses seed + r. bound_satisfied holds
/// when mean + 2 * std_error >= exp(omega0 h).
FarEstimate estimate_false_alarm_period(const SimConfig& config, double d_alpha,
                                        std::optional<double> truncate_at = std::nullopt);

using Rng = std::mt19937_64;
using NominalSampler = std::function<std::vector<double>(Rng&)>;

/// Uniform points in [lo, hi]^m.
NominalSampler uniform_box_sampler(int m, double lo = 0.0, double hi = 1.0);

/// Half-open frame window [start, end).
struct InjectionWindow {
    std::uint64_t start = 0;
    std::uint64_t end = 0;
};

/// Frames 0..length-1 with `objects_per_frame` nominal objects each; inside
/// the window every object is shifted by `anomaly_offset` along the first
/// coordinate.
std::vector<Frame> make_injected_stream(const NominalSampler& sampler, double anomaly_offset,
                                        InjectionWindow window, std::size_t length, std::uint64_t seed,
                                        std::size_t objects_per_frame = 1);

struct SimulationRow {
    double h = 0.0;
    double omega0 = 0.0;
    FarEstimate estimate;
};

/// CSV with header h,omega0,bound_period,mean_period,std_error,n_runs,censored,bound_satisfied.
void write_simulation_report(std::ostream& out, std::span<const SimulationRow> rows);

}  // namespace seqdetect::sim
