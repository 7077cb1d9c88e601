#include "pcmlab/schedule.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pcmlab/rng.hpp"

using namespace pcmlab;

namespace {

// independent reference: composite Simpson quadrature of beta over [0, t]
double beta_integral_quadrature(const NoiseSchedule& s, double t, int panels = 20000) {
    const double h = t / (2.0 * panels);
    // the linear rate evaluated directly, valid on [0, t] where the integral starts
    auto beta_raw = [&](double u) { return s.beta_min + (s.beta_max - s.beta_min) * u; };
    double acc = beta_raw(0.0) + beta_raw(t);
    for (int i = 1; i < 2 * panels; ++i) acc += beta_raw(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// independent reference: bisection of the monotone log-SNR curve
double t_of_log_snr_bisect(const NoiseSchedule& s, double lam) {
    double lo = s.t_min, hi = s.t_max;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (s.log_snr(mid) > lam) lo = mid; // log-SNR decreases in t
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST(NoiseSchedule, BetaIsLinear) {
    NoiseSchedule s;
    EXPECT_DOUBLE_EQ(s.beta(1.0), s.beta_max);
    for (double t : {0.001, 0.3, 0.72, 1.0})
        EXPECT_DOUBLE_EQ(s.beta(t), s.beta_min + (s.beta_max - s.beta_min) * t);
}

TEST(NoiseSchedule, AlphaMatchesQuadrature) {
    NoiseSchedule s;
    for (double t : {0.001, 0.05, 0.26, 0.5, 0.77, 1.0}) {
        const double b_ref = beta_integral_quadrature(s, t);
        EXPECT_NEAR(s.beta_integral(t), b_ref, 1e-9 * std::max(1.0, b_ref));
        EXPECT_NEAR(s.alpha(t), std::exp(-0.5 * b_ref), 1e-9);
    }
}

TEST(NoiseSchedule, FrozenReferenceValues) {
    NoiseSchedule s;
    EXPECT_NEAR(s.alpha(1.0), 0.006571586494929619, 1e-15);
    EXPECT_NEAR(s.log_snr(0.5), -1.2275677344107874, 1e-12);
}

TEST(NoiseSchedule, VariancePreservingIdentity) {
    NoiseSchedule s;
    StreamRng rng(1, stream::kEval, 0);
    for (int i = 0; i < 1000; ++i) {
        const double t = rng.next_uniform(s.t_min, s.t_max);
        const auto [a, sig] = s.alpha_sigma(t);
        EXPECT_NEAR(a * a + sig * sig, 1.0, 1e-12);
        EXPECT_DOUBLE_EQ(a, s.alpha(t));
        EXPECT_DOUBLE_EQ(sig, s.sigma(t));
    }
}

TEST(NoiseSchedule, LogSnrDefinitionAndMonotonicity) {
    NoiseSchedule s;
    double prev = s.log_snr(s.t_min);
    for (int i = 1; i <= 200; ++i) {
        const double t = s.t_min + (s.t_max - s.t_min) * i / 200.0;
        const double lam = s.log_snr(t);
        EXPECT_LT(lam, prev); // strictly decreasing
        EXPECT_NEAR(lam, std::log(s.alpha(t) / s.sigma(t)), 1e-10);
        prev = lam;
    }
}

TEST(NoiseSchedule, TimeOfLogSnrInvertsLogSnr) {
    NoiseSchedule s;
    for (int i = 0; i <= 100; ++i) {
        const double t = s.t_min + (s.t_max - s.t_min) * i / 100.0;
        const double lam = s.log_snr(t);
        EXPECT_NEAR(s.t_of_log_snr(lam), t, 1e-9);
        EXPECT_NEAR(s.t_of_log_snr(lam), t_of_log_snr_bisect(s, lam), 1e-9);
    }
    // out-of-range targets clamp to the schedule endpoints
    EXPECT_DOUBLE_EQ(s.t_of_log_snr(s.log_snr(s.t_min) + 10.0), s.t_min);
    EXPECT_DOUBLE_EQ(s.t_of_log_snr(s.log_snr(s.t_max) - 10.0), s.t_max);
}

TEST(NoiseSchedule, DriftAndDiffusion) {
    NoiseSchedule s;
    for (double t : {0.01, 0.4, 0.99}) {
        EXPECT_DOUBLE_EQ(s.drift_coeff(t), -0.5 * s.beta(t));
        EXPECT_DOUBLE_EQ(s.diffusion_sq(t), s.beta(t));
    }
}

TEST(NoiseSchedule, Validation) {
    NoiseSchedule s;
    EXPECT_NO_THROW(s.validate());
    EXPECT_THROW(s.check_time(1.5), std::domain_error);
    EXPECT_THROW(s.check_time(0.0), std::domain_error);

    NoiseSchedule bad = s;
    bad.t_min = 2.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = s;
    bad.beta_max = 0.05;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(TimestepGrid, UniformEndpointsExact) {
    NoiseSchedule s;
    const TimestepGrid g = TimestepGrid::uniform(s, 50);
    ASSERT_EQ(g.times.size(), 51u);
    EXPECT_EQ(g.intervals(), 50);
    EXPECT_EQ(g.times.front(), s.t_min); // pinned bitwise, not just close
    EXPECT_EQ(g.times.back(), s.t_max);
    const double dt = (s.t_max - s.t_min) / 50.0;
    for (size_t i = 1; i < g.times.size(); ++i)
        EXPECT_NEAR(g.times[i] - g.times[i - 1], dt, 1e-15);
    EXPECT_THROW(TimestepGrid::uniform(s, 0), std::invalid_argument);
}

TEST(PhasePartition, UniformEdgeIndices) {
    NoiseSchedule s;
    const TimestepGrid g = TimestepGrid::uniform(s, 50);
    EXPECT_EQ(PhasePartition::uniform(g, 4).edges, (std::vector<int>{0, 13, 25, 38, 50}));
    EXPECT_EQ(PhasePartition::uniform(g, 1).edges, (std::vector<int>{0, 50}));
    EXPECT_EQ(PhasePartition::uniform(g, 2).edges, (std::vector<int>{0, 25, 50}));
    // round half away from zero: j * 50 / 7 = 7.14, 14.3, 21.4, 28.6, 35.7, 42.9
    EXPECT_EQ(PhasePartition::uniform(g, 7).edges, (std::vector<int>{0, 7, 14, 21, 29, 36, 43, 50}));

    const PhasePartition all = PhasePartition::uniform(TimestepGrid::uniform(s, 4), 4);
    EXPECT_EQ(all.edges, (std::vector<int>{0, 1, 2, 3, 4}));

    EXPECT_THROW(PhasePartition::uniform(g, 60), std::invalid_argument);
}

TEST(PhasePartition, WithEdgesValidation) {
    NoiseSchedule s;
    const TimestepGrid g = TimestepGrid::uniform(s, 50);
    const PhasePartition p = PhasePartition::with_edges(g, {0, 10, 50});
    EXPECT_EQ(p.phases(), 2);
    EXPECT_DOUBLE_EQ(p.edge_time(1), g.times[10]);
    EXPECT_THROW(PhasePartition::with_edges(g, {1, 25, 50}), std::invalid_argument);
    EXPECT_THROW(PhasePartition::with_edges(g, {0, 25, 49}), std::invalid_argument);
    EXPECT_THROW(PhasePartition::with_edges(g, {0, 25, 25, 50}), std::invalid_argument);
    EXPECT_THROW(PhasePartition::with_edges(g, {0}), std::invalid_argument);
}

TEST(PhasePartition, PhaseOfTieBreak) {
    NoiseSchedule s;
    const PhasePartition p = PhasePartition::uniform(TimestepGrid::uniform(s, 50), 4);
    EXPECT_EQ(p.phase_of(s.t_min), 0);
    EXPECT_EQ(p.phase_of(s.t_max), 3);
    // an interior edge belongs to the phase below it
    for (int m = 1; m < 4; ++m) EXPECT_EQ(p.phase_of(p.edge_time(m)), m - 1);
    EXPECT_EQ(p.phase_of(p.edge_time(1) + 1e-9), 1);
    EXPECT_THROW(p.phase_of(2.0), std::domain_error);
    EXPECT_THROW(p.phase_of(0.0), std::domain_error);
}

TEST(PhasePartition, PhaseContaining) {
    NoiseSchedule s;
    const PhasePartition p = PhasePartition::uniform(TimestepGrid::uniform(s, 50), 4);
    EXPECT_EQ(p.phase_containing(0, 13), 0);
    EXPECT_EQ(p.phase_containing(13, 25), 1);
    EXPECT_EQ(p.phase_containing(14, 20), 1);
    EXPECT_EQ(p.phase_containing(12, 14), -1); // crosses the 13 edge
    EXPECT_EQ(p.phase_containing(0, 50), -1);
}

TEST(PhasePartition, EarlyPhaseKeepsAlphaAboveHalf) {
    // with at least 3 phases the whole first phase sits in the high-alpha
    // region, so the clamped x0 parameterization coincides with the plain one
    NoiseSchedule s;
    const TimestepGrid g = TimestepGrid::uniform(s, 50);
    for (int m = 3; m <= 8; ++m) {
        const PhasePartition p = PhasePartition::uniform(g, m);
        EXPECT_GT(s.alpha(p.edge_time(1)), 0.5) << "phases = " << m;
    }
}
