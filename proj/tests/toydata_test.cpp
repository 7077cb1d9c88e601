#include "pcmlab/toydata.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pcmlab/rng.hpp"
#include "pcmlab/schedule.hpp"
#include "pcmlab/solvers.hpp"

using namespace pcmlab;

TEST(MixtureSpec, RingGeometry) {
    const MixtureSpec mix = MixtureSpec::ring(8, 2.0, 0.1, 2);
    EXPECT_EQ(mix.class_count, 2);
    ASSERT_EQ(mix.components.size(), 2u);
    ASSERT_EQ(mix.components[0].size(), 4u);
    ASSERT_EQ(mix.components[1].size(), 4u);

    // angular positions k go to class k % classes, so class 0 holds the even
    // angles and class 1 the odd ones; modes() lists them grouped by class
    const std::vector<MixtureSpec::Mode> modes = mix.modes();
    ASSERT_EQ(modes.size(), 8u);
    for (int j = 0; j < 4; ++j) {
        EXPECT_EQ(modes[static_cast<size_t>(j)].cls, 0);
        EXPECT_EQ(modes[static_cast<size_t>(4 + j)].cls, 1);
        const double a0 = 2.0 * M_PI * (2 * j) / 8.0;
        const double a1 = 2.0 * M_PI * (2 * j + 1) / 8.0;
        EXPECT_NEAR(modes[static_cast<size_t>(j)].mean.x, 2.0 * std::cos(a0), 1e-12);
        EXPECT_NEAR(modes[static_cast<size_t>(j)].mean.y, 2.0 * std::sin(a0), 1e-12);
        EXPECT_NEAR(modes[static_cast<size_t>(4 + j)].mean.x, 2.0 * std::cos(a1), 1e-12);
        EXPECT_NEAR(modes[static_cast<size_t>(4 + j)].mean.y, 2.0 * std::sin(a1), 1e-12);
    }

    for (const auto& cls_comps : mix.components) {
        double total = 0.0;
        for (const MixtureComponent& c : cls_comps) {
            total += c.weight;
            EXPECT_DOUBLE_EQ(c.cov.xx, 0.01);
            EXPECT_DOUBLE_EQ(c.cov.yy, 0.01);
            EXPECT_DOUBLE_EQ(c.cov.xy, 0.0);
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
    EXPECT_NO_THROW(mix.validate());
    EXPECT_THROW(MixtureSpec::ring(7, 2.0, 0.1, 2), std::invalid_argument);
}

TEST(MixtureSpec, ValidationRejectsBadSpecs) {
    MixtureSpec mix = MixtureSpec::ring(8, 2.0, 0.1, 2);
    mix.components[0][0].weight = 0.9;
    EXPECT_THROW(mix.validate(), std::invalid_argument);

    MixtureSpec bad_cov = MixtureSpec::ring(8, 2.0, 0.1, 2);
    bad_cov.components[1][2].cov.xx = -1.0;
    EXPECT_THROW(bad_cov.validate(), std::invalid_argument);
    bad_cov.components[1][2].cov = {1.0, 2.0, 1.0}; // |xy| > sqrt(xx yy)
    EXPECT_THROW(bad_cov.validate(), std::invalid_argument);
}

TEST(MixtureSpec, DataStdMatchesMomentFormula) {
    const MixtureSpec mix = MixtureSpec::ring(8, 2.0, 0.1, 2);
    // pooled second moment of the equal-weight class mixture, computed from
    // the component moments: E[x^2] = sum w (cov + mean^2) minus the mean
    double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0;
    for (const auto& cls_comps : mix.components)
        for (const MixtureComponent& c : cls_comps) {
            const double w = c.weight / mix.class_count;
            mx += w * c.mean.x;
            my += w * c.mean.y;
            sxx += w * (c.cov.xx + c.mean.x * c.mean.x);
            syy += w * (c.cov.yy + c.mean.y * c.mean.y);
        }
    const double vx = sxx - mx * mx, vy = syy - my * my;
    EXPECT_NEAR(mix.data_std(), std::sqrt(0.5 * (vx + vy)), 1e-12);
    EXPECT_NEAR(mix.data_std(), 1.4177446878757824, 1e-12); // frozen for the 8-mode ring
}

TEST(MixtureSpec, SamplingIsDeterministicAndOnMode) {
    const MixtureSpec mix = MixtureSpec::ring(8, 2.0, 0.1, 2);
    StreamRng a(3, stream::kData, 5);
    StreamRng b(3, stream::kData, 5);
    const Vec2 pa = mix.sample(1, a);
    const Vec2 pb = mix.sample(1, b);
    EXPECT_EQ(pa.x, pb.x);
    EXPECT_EQ(pa.y, pb.y);

    // shrink the spread to nothing: every draw lands on a component mean
    MixtureSpec tight = MixtureSpec::ring(8, 2.0, 1e-12, 2);
    const std::vector<MixtureSpec::Mode> modes = tight.modes();
    for (int i = 0; i < 200; ++i) {
        StreamRng rng(7, stream::kData, static_cast<uint64_t>(i));
        const int cls = i % 2;
        const Vec2 p = tight.sample(cls, rng);
        const int k = nearest_mode(modes, p);
        EXPECT_EQ(modes[static_cast<size_t>(k)].cls, cls);
        EXPECT_NEAR(distance(p, modes[static_cast<size_t>(k)].mean), 0.0, 1e-9);
    }
}

TEST(MixtureSpec, EmpiricalClassMean) {
    const MixtureSpec mix = MixtureSpec::ring(8, 2.0, 0.1, 2);
    const int n = 100000;
    Vec2 acc{0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        StreamRng rng(11, stream::kData, static_cast<uint64_t>(i));
        acc += mix.sample(0, rng);
    }
    // class 0 means sit at angles 0, pi/2, pi, 3pi/2 and cancel exactly
    EXPECT_NEAR(acc.x / n, 0.0, 0.02);
    EXPECT_NEAR(acc.y / n, 0.0, 0.02);
}

TEST(NearestMode, PicksClosest) {
    const MixtureSpec mix = MixtureSpec::ring(8, 2.0, 0.1, 2);
    const std::vector<MixtureSpec::Mode> modes = mix.modes();
    for (size_t k = 0; k < modes.size(); ++k)
        EXPECT_EQ(nearest_mode(modes, modes[k].mean), static_cast<int>(k));
    EXPECT_EQ(nearest_mode(modes, {2.1, 0.05}), 0); // near (2, 0)
}

TEST(SampleHelpers, ShapesAndDeterminism) {
    const MixtureSpec mix = MixtureSpec::ring(8, 2.0, 0.1, 2);
    const std::vector<Vec2> a = sample_data(mix, 0, 100, 17);
    const std::vector<Vec2> b = sample_data(mix, 0, 100, 17);
    ASSERT_EQ(a.size(), 100u);
    for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].x, b[i].x);

    const std::vector<LabeledPoint> lab = sample_labeled(mix, 500, 19);
    ASSERT_EQ(lab.size(), 500u);
    int c0 = 0;
    for (const LabeledPoint& p : lab) {
        ASSERT_GE(p.cls, 0);
        ASSERT_LT(p.cls, 2);
        c0 += p.cls == 0;
    }
    EXPECT_NEAR(c0, 250, 60); // classes are equally likely
}

TEST(ForwardDiffuse, MatchesClosedForm) {
    NoiseSchedule sched;
    const Vec2 x0{0.6, 0.8};
    const Vec2 noise{-1.1, 0.4};
    for (double t : {0.001, 0.3, 1.0}) {
        const Vec2 xt = forward_diffuse(sched, x0, t, noise);
        EXPECT_DOUBLE_EQ(xt.x, sched.alpha(t) * x0.x + sched.sigma(t) * noise.x);
        EXPECT_DOUBLE_EQ(xt.y, sched.alpha(t) * x0.y + sched.sigma(t) * noise.y);
    }
}

TEST(DiffuseBetween, IdentityAndMarginals) {
    NoiseSchedule sched;
    const Vec2 x{0.4, -0.9};
    const Vec2 same = diffuse_between(sched, x, 0.5, 0.5, {3.0, -3.0});
    EXPECT_DOUBLE_EQ(same.x, x.x); // equal times: no scaling, no fresh noise
    EXPECT_DOUBLE_EQ(same.y, x.y);
    EXPECT_THROW(diffuse_between(sched, x, 0.5, 0.3, {0.0, 0.0}), std::domain_error);

    // composing x0 -> u -> s must match the direct forward kernel at s in
    // distribution; check mean and variance of the x coordinate
    const double u = 0.3, s = 0.8;
    const Vec2 x0{1.5, -0.5};
    const int n = 40000;
    double mean = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        StreamRng rng(23, stream::kEval, static_cast<uint64_t>(i));
        const Vec2 xu = forward_diffuse(sched, x0, u, rng.next_normal2());
        const Vec2 xs = diffuse_between(sched, xu, u, s, rng.next_normal2());
        mean += xs.x;
        sq += xs.x * xs.x;
    }
    mean /= n;
    sq = sq / n - mean * mean;
    EXPECT_NEAR(mean, sched.alpha(s) * x0.x, 0.02);
    EXPECT_NEAR(sq, sched.sigma(s) * sched.sigma(s), 0.02);
}

TEST(GaussianOracle, EpsilonIsExactScore) {
    NoiseSchedule sched;
    GaussianOracle g; // N((1, 0.5), 0.25 I)
    const double t = 0.6;
    const double a = sched.alpha(t);

    // at the diffused mean the noise prediction vanishes
    const Vec2 at_mean = g.epsilon(sched, {a * g.mean.x, a * g.mean.y}, t);
    EXPECT_NEAR(at_mean.x, 0.0, 1e-14);
    EXPECT_NEAR(at_mean.y, 0.0, 1e-14);

    // eps = -sigma * grad log p for the Gaussian marginal at t
    const Vec2 x{0.7, -0.4};
    const double mv = g.marginal_var(sched, t);
    EXPECT_NEAR(mv, a * a * g.stddev * g.stddev + sched.sigma(t) * sched.sigma(t), 1e-14);
    auto log_pdf = [&](const Vec2& p) {
        const double dx = p.x - a * g.mean.x, dy = p.y - a * g.mean.y;
        return -0.5 * (dx * dx + dy * dy) / mv - std::log(2.0 * M_PI * mv);
    };
    const double h = 1e-6;
    const double gx = (log_pdf({x.x + h, x.y}) - log_pdf({x.x - h, x.y})) / (2.0 * h);
    const double gy = (log_pdf({x.x, x.y + h}) - log_pdf({x.x, x.y - h})) / (2.0 * h);
    const Vec2 eps = g.epsilon(sched, x, t);
    EXPECT_NEAR(eps.x, -sched.sigma(t) * gx, 1e-7);
    EXPECT_NEAR(eps.y, -sched.sigma(t) * gy, 1e-7);
}

TEST(GaussianOracle, OdeSolutionMatchesFineDdim) {
    NoiseSchedule sched;
    GaussianOracle g;
    const Vec2 x_start{2.2, -1.7};
    const double t_hi = sched.t_max, t_lo = sched.t_min;

    EXPECT_EQ(g.ode_solution(sched, x_start, 0.5, 0.5).x, x_start.x); // s = t identity

    // the closed form must agree with a very fine DDIM sweep driven by the
    // oracle's own noise prediction
    Vec2 x = x_start;
    const int steps = 10000;
    for (int j = steps; j >= 1; --j) {
        const double t = t_lo + (t_hi - t_lo) * j / steps;
        const double s = t_lo + (t_hi - t_lo) * (j - 1) / steps;
        x = ddim_step(sched, g.epsilon(sched, x, t), x, t, s);
    }
    const Vec2 exact = g.ode_solution(sched, x_start, t_hi, t_lo);
    EXPECT_NEAR(x.x, exact.x, 1e-5);
    EXPECT_NEAR(x.y, exact.y, 1e-5);

    // transporting forward and back is the identity
    const Vec2 down = g.ode_solution(sched, x_start, 0.9, 0.2);
    const Vec2 back = g.ode_solution(sched, down, 0.2, 0.9);
    EXPECT_NEAR(back.x, x_start.x, 1e-10);
    EXPECT_NEAR(back.y, x_start.y, 1e-10);
}

TEST(GaussianOracle, SampleMoments) {
    GaussianOracle g;
    const int n = 50000;
    Vec2 mean{0.0, 0.0};
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
        StreamRng rng(29, stream::kData, static_cast<uint64_t>(i));
        const Vec2 p = g.sample(rng);
        mean += p;
        var += (p.x - g.mean.x) * (p.x - g.mean.x) + (p.y - g.mean.y) * (p.y - g.mean.y);
    }
    EXPECT_NEAR(mean.x / n, g.mean.x, 0.01);
    EXPECT_NEAR(mean.y / n, g.mean.y, 0.01);
    EXPECT_NEAR(var / (2.0 * n), g.stddev * g.stddev, 0.005);
}

TEST(DataRef, DelegatesToAttachedSource) {
    const MixtureSpec mix = MixtureSpec::ring(8, 2.0, 0.1, 2);
    GaussianOracle g;

    DataRef none;
    StreamRng rng(1, 1, 1);
    EXPECT_THROW(none.sample(0, rng), std::logic_error);
    EXPECT_EQ(none.class_count(), 1); // falls back to a single unconditional class

    DataRef mr;
    mr.mix = &mix;
    EXPECT_EQ(mr.class_count(), 2);
    EXPECT_DOUBLE_EQ(mr.data_std(), mix.data_std());

    DataRef gr;
    gr.gauss = &g;
    EXPECT_EQ(gr.class_count(), 1);
    StreamRng r1(2, stream::kData, 0), r2(2, stream::kData, 0);
    const Vec2 a = gr.sample(0, r1);
    const Vec2 b = g.sample(r2);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
}
