#include "seqdetect/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "seqdetect/errors.hpp"
#include "seqdetect/specfun.hpp"

namespace seqdetect::sim {

void SimConfig::validate() const {
    if (m < 1) throw ConfigError("simulation: m must be >= 1");
    if (!(intensity > 0.0) || !std::isfinite(intensity)) throw ConfigError("simulation: intensity must be > 0");
    if (n_samples < 1) throw ConfigError("simulation: n_samples must be >= 1");
}

std::size_t SimConfig::horizon() const {
    if (max_steps > 0) return max_steps;
    const double steps = 100.0 * std::exp(omega0 * h);
    if (!(steps < 1e15)) throw ConfigError("simulation: default horizon 100 * exp(omega0 h) is too large");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(steps)));
}

double nn_distance_cdf(double r, int m, double intensity) {
    if (!(r >= 0.0)) throw DomainError("nn_distance_cdf: r must be non-negative");
    if (std::isinf(r)) return 1.0;
    return -std::expm1(-intensity * specfun::volume_constant(m) * std::pow(r, m));
}

NnSample sample_nn_distances(const SimConfig& config) {
    config.validate();
    if (config.m > 10) {
        throw ConfigError("sample_nn_distances: m = " + std::to_string(config.m) +
                          " > 10 refused (the enclosing cube would need too many points)");
    }
    const int m = config.m;
    const double v_m = specfun::volume_constant(m);
    // P(NN > r*) = exp(-lambda v_m r*^m) = 1e-6.
    const double radius = std::pow(std::log(1e6) / (config.intensity * v_m), 1.0 / m);

    NnSample out;
    out.cube_side = 2.0 * radius;
    out.distances.reserve(config.n_samples);

    Rng rng(config.seed);
    std::poisson_distribution<std::uint64_t> count(config.intensity * std::pow(out.cube_side, m));
    std::uniform_real_distribution<double> coord(-radius, radius);
    for (std::size_t trial = 0; trial < config.n_samples; ++trial) {
        std::uint64_t n = count(rng);
        while (n == 0) {
            ++out.redraws;
            n = count(rng);
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::uint64_t p = 0; p < n; ++p) {
            double r2 = 0.0;
            for (int a = 0; a < m; ++a) {
                const double c = coord(rng);
                r2 += c * c;
            }
            best = std::min(best, r2);
        }
        out.distances.push_back(std::sqrt(best));
    }
    return out;
}

namespace {

class DeltaSource {
public:
    DeltaSource(double d_alpha, int m, std::optional<double> truncate_at)
        : inv_v_(1.0 / specfun::volume_constant(m)), baseline_(std::pow(d_alpha, m)), cap_(truncate_at) {
        if (!std::isfinite(d_alpha) || d_alpha < 0.0) throw DomainError("d_alpha must be non-negative");
        if (cap_ && !(*cap_ > -baseline_)) throw DomainError("truncation point below the support of delta");
    }

    double operator()(Rng& rng) {
        while (true) {
            const double delta = exp_(rng) * inv_v_ - baseline_;
            if (!cap_ || delta <= *cap_) return delta;
        }
    }

private:
    double inv_v_;
    double baseline_;
    std::optional<double> cap_;
    std::exponential_distribution<double> exp_{1.0};
};

}  // namespace

std::vector<double> sample_delta(double d_alpha, int m, std::size_t count, std::uint64_t seed,
                                 std::optional<double> truncate_at) {
    if (count < 1) throw ConfigError("sample_delta: count must be >= 1");
    DeltaSource source(d_alpha, m, truncate_at);
    Rng rng(seed);
    std::vector<double> out(count);
    for (auto& d : out) d = source(rng);
    return out;
}

FarEstimate estimate_false_alarm_period(const SimConfig& config, double d_alpha,
                                        std::optional<double> truncate_at) {
    config.validate();
    if (!(config.h >= 0.0) || !std::isfinite(config.h)) throw ConfigError("simulation: h must be >= 0");
    if (!(config.omega0 > 0.0)) throw ConfigError("simulation: omega0 must be > 0");
    const std::size_t horizon = config.horizon();

    std::vector<double> periods(config.n_samples);
    std::size_t censored = 0;
    for (std::size_t run = 0; run < config.n_samples; ++run) {
        Rng rng(config.seed + run);
        DeltaSource source(d_alpha, config.m, truncate_at);
        double s = 0.0;
        std::size_t t = 0;
        bool crossed = false;
        while (t < horizon) {
            ++t;
            s = std::max(s + source(rng), 0.0);
            if (s >= config.h) {
                crossed = true;
                break;
            }
        }
        if (!crossed) ++censored;
        periods[run] = static_cast<double>(t);
    }
    if (censored == config.n_samples) {
        throw DegenerateError("horizon too short: all " + std::to_string(censored) +
                              " runs were censored at " + std::to_string(horizon) + " steps");
    }

    FarEstimate est;
    est.n_runs = config.n_samples;
    est.censored = censored;
    const double n = static_cast<double>(periods.size());
    est.mean_period = std::accumulate(periods.begin(), periods.end(), 0.0) / n;
    if (periods.size() > 1) {
        double ss = 0.0;
        for (double p : periods) ss += (p - est.mean_period) * (p - est.mean_period);
        est.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    } else {
        // One run carries no spread estimate; use the mean itself, the
        // standard deviation of an exponential waiting time.
        est.std_error = est.mean_period;
    }
    est.bound_period = std::exp(config.omega0 * config.h);
    est.bound_satisfied = est.mean_period + 2.0 * est.std_error >= est.bound_period;
    return est;
}

NominalSampler uniform_box_sampler(int m, double lo, double hi) {
    if (m < 1) throw ConfigError("uniform_box_sampler: m must be >= 1");
    if (!(hi > lo)) throw ConfigError("uniform_box_sampler: empty box");
    return [m, lo, hi](Rng& rng) {
        std::uniform_real_distribution<double> u(lo, hi);
        std::vector<double> p(static_cast<std::size_t>(m));
        for (auto& c : p) c = u(rng);
        return p;
    };
}

std::vector<Frame> make_injected_stream(const NominalSampler& sampler, double anomaly_offset,
                                        InjectionWindow window, std::size_t length, std::uint64_t seed,
                                        std::size_t objects_per_frame) {
    if (window.start > window.end || window.end > length) {
        throw ConfigError("injection window must lie within [0, length)");
    }
    if (!std::isfinite(anomaly_offset)) throw ConfigError("anomaly offset must be finite");
    Rng rng(seed);
    std::vector<Frame> frames(length);
    for (std::size_t t = 0; t < length; ++t) {
        frames[t].frame_id = t;
        const bool inside = t >= window.start && t < window.end;
        for (std::size_t i = 0; i < objects_per_frame; ++i) {
            FeatureVector fv;
            fv.frame_id = t;
            fv.object_id = i;
            fv.values = sampler(rng);
            if (fv.values.empty()) throw ConfigError("sampler returned an empty point");
            if (inside) fv.values[0] += anomaly_offset;
            frames[t].objects.push_back(std::move(fv));
        }
    }
    return frames;
}

void write_simulation_report(std::ostream& out, std::span<const SimulationRow> rows) {
    out << "h,omega0,bound_period,mean_period,std_error,n_runs,censored,bound_satisfied\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{},{},{},{},{},{}\n", r.h, r.omega0, r.estimate.bound_period,
                           r.estimate.mean_period, r.estimate.std_error, r.estimate.n_runs,
                           r.estimate.censored, r.estimate.bound_satisfied ? "true" : "false");
    }
}

}  // namespace seqdetect::sim
