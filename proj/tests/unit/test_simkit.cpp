#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "oracles.hpp"
#include "seqdetect/calibration.hpp"
#include "seqdetect/errors.hpp"
#include "seqdetect/simkit.hpp"

using namespace seqdetect;

namespace {

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

// Pearson statistic for delta + d^m against Exponential(v_m) over equiprobable bins.
double chi_square_statistic(const std::vector<double>& deltas, double baseline, double v_m, int bins) {
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double d : deltas) {
        const double u = -std::expm1(-v_m * (d + baseline));
        const int b = std::min(bins - 1, static_cast<int>(u * bins));
        counts[static_cast<std::size_t>(b)] += 1.0;
    }
    const double expected = static_cast<double>(deltas.size()) / bins;
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    return stat;
}

double omega0_for(int m, double d_alpha, double phi) {
    const double v = specfun::volume_constant(m);
    return omega0_lambert(v, theta(v, d_alpha, m), phi);
}

}  // namespace

TEST_CASE("nn_distance_cdf examples") {
    CHECK(sim::nn_distance_cdf(0.0, 2) == 0.0);
    CHECK(sim::nn_distance_cdf(INFINITY, 3) == 1.0);
    CHECK(sim::nn_distance_cdf(50.0, 1) == 1.0);
    CHECK(sim::nn_distance_cdf(std::log(2.0) / 2.0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sim::nn_distance_cdf(1.0, 2, 2.0) == doctest::Approx(1.0 - std::exp(-2.0 * std::numbers::pi)).epsilon(1e-15));
    CHECK_THROWS_AS(sim::nn_distance_cdf(-0.1, 2), DomainError);
}

TEST_CASE("Poisson nearest-neighbour distances follow the analytic law") {
    for (int m : {1, 2}) {
        sim::SimConfig cfg;
        cfg.m = m;
        cfg.n_samples = 100000;
        cfg.seed = 1000 + static_cast<std::uint64_t>(m);
        const auto sample = sim::sample_nn_distances(cfg);
        REQUIRE(sample.distances.size() == cfg.n_samples);
        const double ks = oracle::ks_statistic(sample.distances, [m](double r) { return sim::nn_distance_cdf(r, m); });
        CHECK(ks <= 0.01);
        CHECK(sample.cube_side > 0.0);
    }
}

TEST_CASE("median nearest-neighbour distance scales as intensity^(-1/m)") {
    for (int m : {1, 2, 3}) {
        sim::SimConfig cfg;
        cfg.m = m;
        cfg.n_samples = 40000;
        cfg.seed = 7;
        const double base = median(sim::sample_nn_distances(cfg).distances);
        cfg.intensity = 2.0;
        cfg.seed = 8;
        const double doubled = median(sim::sample_nn_distances(cfg).distances);
        CHECK(doubled / base == doctest::Approx(std::pow(2.0, -1.0 / m)).epsilon(0.03));
    }
}

TEST_CASE("nearest-neighbour sampler guards") {
    sim::SimConfig cfg;
    cfg.m = 11;
    CHECK_THROWS_AS(sim::sample_nn_distances(cfg), ConfigError);
    cfg.m = 2;
    cfg.intensity = 0.0;
    CHECK_THROWS_AS(sim::sample_nn_distances(cfg), ConfigError);
    cfg.intensity = 1.0;
    cfg.n_samples = 0;
    CHECK_THROWS_AS(sim::sample_nn_distances(cfg), ConfigError);
}

TEST_CASE("empty realisations are redrawn and counted") {
    // Low intensity with m = 1: the cube holds about 27.6 points on average,
    // so empty draws are rare but the counter must stay consistent.
    sim::SimConfig cfg;
    cfg.m = 1;
    cfg.n_samples = 2000;
    cfg.seed = 3;
    const auto a = sim::sample_nn_distances(cfg);
    const auto b = sim::sample_nn_distances(cfg);
    CHECK(a.distances == b.distances);
    CHECK(a.redraws == b.redraws);
    CHECK(a.cube_side == doctest::Approx(std::log(1e6)).epsilon(1e-12));
}

TEST_CASE("sample_delta moments and support") {
    for (int m : {1, 2, 5}) {
        const double v = specfun::volume_constant(m);
        const double d_alpha = 0.4;
        const double b = std::pow(d_alpha, m);
        const auto deltas = sim::sample_delta(d_alpha, m, 100000, 17);
        const double mean = std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(deltas.size());
        CHECK(mean + b == doctest::Approx(1.0 / v).epsilon(0.03));
        CHECK(*std::min_element(deltas.begin(), deltas.end()) >= -b);
        const double below = static_cast<double>(std::count_if(deltas.begin(), deltas.end(), [](double d) { return d <= 0.0; })) /
                             static_cast<double>(deltas.size());
        CHECK(std::abs(below - (1.0 - std::exp(-v * b))) <= 0.01);
    }
}

TEST_CASE("sample_delta matches the density by chi-square") {
    const double critical = boost::math::quantile(boost::math::complement(boost::math::chi_squared(49.0), 0.001));
    for (int m : {1, 2, 5, 10}) {
        const double v = specfun::volume_constant(m);
        const double d_alpha = 0.3;
        const auto deltas = sim::sample_delta(d_alpha, m, 100000, 40 + static_cast<std::uint64_t>(m));
        CHECK(chi_square_statistic(deltas, std::pow(d_alpha, m), v, 50) < critical);
    }
}

TEST_CASE("sample_delta truncation") {
    const auto deltas = sim::sample_delta(0.1, 2, 20000, 5, 0.2);
    CHECK(*std::max_element(deltas.begin(), deltas.end()) <= 0.2);
    CHECK_THROWS_AS(sim::sample_delta(0.1, 2, 10, 5, -1.0), DomainError);
    CHECK_THROWS_AS(sim::sample_delta(-0.1, 2, 10, 5), DomainError);
    CHECK_THROWS_AS(sim::sample_delta(0.1, 2, 0, 5), ConfigError);
    CHECK(sim::sample_delta(0.1, 2, 1000, 9) == sim::sample_delta(0.1, 2, 1000, 9));
    CHECK(sim::sample_delta(0.1, 2, 1000, 9) != sim::sample_delta(0.1, 2, 1000, 10));
}

TEST_CASE("mean false alarm period respects the bound") {
    struct Cell {
        int m;
        double phi;
        double period;
        std::size_t runs;
        std::size_t max_steps;
    };
    const double d_alpha = 1e-3;
    // For m = 6, phi = 2 the bound is far below the typical crossing time, so
    // the default horizon of 100 bound periods would censor every run.
    for (const Cell c : {Cell{2, 2.0, 100.0, 2000, 0}, Cell{2, 2.0, 1000.0, 500, 0}, Cell{6, 2.0, 10.0, 100, 1000000},
                         Cell{6, 2.0, 100.0, 100, 1000000}}) {
        const double phi = c.phi;
        const double w = omega0_for(c.m, d_alpha, phi);
        sim::SimConfig cfg;
        cfg.m = c.m;
        cfg.n_samples = c.runs;
        cfg.seed = 99;
        cfg.omega0 = w;
        cfg.h = std::log(c.period) / w;
        cfg.max_steps = c.max_steps;
        const auto est = sim::estimate_false_alarm_period(cfg, d_alpha, phi);
        CHECK(est.bound_period == doctest::Approx(c.period).epsilon(1e-9));
        CHECK(est.n_runs == c.runs);
        CHECK(est.bound_satisfied);
        CHECK(est.bound_satisfied == (est.mean_period + 2.0 * est.std_error >= est.bound_period));
        CHECK(est.censored == 0);
    }
}

TEST_CASE("false alarm period edge cases") {
    const double w = omega0_for(2, 1e-3, 2.0);
    sim::SimConfig cfg;
    cfg.m = 2;
    cfg.n_samples = 500;
    cfg.seed = 1;
    cfg.omega0 = w;
    cfg.h = 1e-12;
    const auto tiny = sim::estimate_false_alarm_period(cfg, 1e-3, 2.0);
    // First step with delta > 0; P(delta <= 0) = 1 - exp(-pi 1e-6) is negligible.
    CHECK(tiny.mean_period == doctest::Approx(1.0).epsilon(0.01));
    cfg.h = 0.0;
    const auto zero = sim::estimate_false_alarm_period(cfg, 1e-3, 2.0);
    CHECK(zero.mean_period == 1.0);
    CHECK(zero.bound_period == 1.0);
    CHECK(zero.bound_satisfied);
    cfg.h = 1e-12;

    const auto again = sim::estimate_false_alarm_period(cfg, 1e-3, 2.0);
    CHECK(again.mean_period == tiny.mean_period);
    CHECK(again.std_error == tiny.std_error);

    cfg.n_samples = 1;
    const auto single = sim::estimate_false_alarm_period(cfg, 1e-3, 2.0);
    CHECK(single.std_error == single.mean_period);

    cfg.n_samples = 20;
    cfg.h = 1e6;
    cfg.max_steps = 5;
    CHECK_THROWS_AS(sim::estimate_false_alarm_period(cfg, 1e-3, 2.0), DegenerateError);

    cfg.max_steps = 0;
    cfg.omega0 = 0.0;
    CHECK_THROWS_AS(sim::estimate_false_alarm_period(cfg, 1e-3, 2.0), ConfigError);
}

TEST_CASE("censored runs count the horizon") {
    sim::SimConfig cfg;
    cfg.m = 2;
    cfg.n_samples = 200;
    cfg.seed = 11;
    cfg.omega0 = omega0_for(2, 1e-3, 2.0);
    cfg.h = 3.0;  // about 10 steps at drift 1/pi
    cfg.max_steps = 8;
    const auto est = sim::estimate_false_alarm_period(cfg, 1e-3, 2.0);
    CHECK(est.censored > 0);
    CHECK(est.censored < est.n_runs);
    CHECK(est.mean_period <= 8.0);
}

TEST_CASE("injected stream layout") {
    const auto sampler = sim::uniform_box_sampler(3, -1.0, 1.0);
    const auto frames = sim::make_injected_stream(sampler, 10.0, {20, 30}, 50, 4, 2);
    REQUIRE(frames.size() == 50);
    for (std::size_t t = 0; t < frames.size(); ++t) {
        CHECK(frames[t].frame_id == t);
        REQUIRE(frames[t].objects.size() == 2);
        for (const auto& o : frames[t].objects) {
            CHECK(o.values.size() == 3);
            const bool inside = t >= 20 && t < 30;
            CHECK((o.values[0] > 5.0) == inside);
            CHECK(o.values[1] >= -1.0);
            CHECK(o.values[1] <= 1.0);
        }
    }
    CHECK_THROWS_AS(sim::make_injected_stream(sampler, 1.0, {40, 60}, 50, 4), ConfigError);
    CHECK_THROWS_AS(sim::make_injected_stream(sampler, 1.0, {30, 20}, 50, 4), ConfigError);
}

TEST_CASE("generators are reproducible and seeds differ") {
    const auto sampler = sim::uniform_box_sampler(2);
    const auto a = sim::make_injected_stream(sampler, 3.0, {5, 10}, 40, 1);
    const auto b = sim::make_injected_stream(sampler, 3.0, {5, 10}, 40, 1);
    const auto c = sim::make_injected_stream(sampler, 3.0, {5, 10}, 40, 2);
    const auto values = [](const std::vector<Frame>& frames) {
        std::vector<double> out;
        for (const auto& f : frames)
            for (const auto& o : f.objects) out.insert(out.end(), o.values.begin(), o.values.end());
        return out;
    };
    CHECK(values(a) == values(b));
    CHECK(values(a) != values(c));

    sim::SimConfig cfg;
    cfg.n_samples = 100;
    cfg.seed = 5;
    const auto first = sim::sample_nn_distances(cfg).distances;
    CHECK(first == sim::sample_nn_distances(cfg).distances);
    cfg.seed = 6;
    CHECK(first != sim::sample_nn_distances(cfg).distances);
}

TEST_CASE("simulation report") {
    sim::FarEstimate est;
    est.mean_period = 250.5;
    est.std_error = 2.5;
    est.n_runs = 100;
    est.bound_period = 100.0;
    est.bound_satisfied = true;
    const std::vector<sim::SimulationRow> rows{{1.5, 0.25, est}};
    std::ostringstream out;
    sim::write_simulation_report(out, rows);
    CHECK(out.str() == "h,omega0,bound_period,mean_period,std_error,n_runs,censored,bound_satisfied\n"
                       "1.5,0.25,100,250.5,2.5,100,0,true\n");
}
