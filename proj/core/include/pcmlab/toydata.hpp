#pragma once

#include <cstdint>
#include <vector>

#include "pcmlab/rng.hpp"
#include "pcmlab/schedule.hpp"
#include "pcmlab/vec2.hpp"

namespace pcmlab {

// symmetric positive-definite 2x2 covariance
struct Cov2 {
    double xx = 1.0;
    double xy = 0.0;
    double yy = 1.0;
};

struct MixtureComponent {
    Vec2 mean;
    Cov2 cov;
    double weight = 1.0;
};

// Class-conditional 2-D Gaussian mixture.  Classes are equally likely; the
// per-class component weights must sum to one.
struct MixtureSpec {
    int class_count = 1;
    std::vector<std::vector<MixtureComponent>> components; // indexed by class

    void validate() const;

    // `modes` means on a circle of the given radius, classes assigned
    // round-robin by angular order (the default benchmark: 8 modes, 2 classes)
    static MixtureSpec ring(int modes, double radius, double mode_std, int classes);

    Vec2 sample(int cls, StreamRng& rng) const;
    // pooled per-dimension standard deviation of the equal-weight class mixture
    double data_std() const;

    struct Mode {
        Vec2 mean;
        int cls;
    };
    std::vector<Mode> modes() const;
};

// index into spec.modes() closest to p
int nearest_mode(const std::vector<MixtureSpec::Mode>& modes, const Vec2& p);

std::vector<Vec2> sample_data(const MixtureSpec& spec, int cls, int n, uint64_t seed);

struct LabeledPoint {
    Vec2 x;
    int cls;
};
// class drawn uniformly per sample
std::vector<LabeledPoint> sample_labeled(const MixtureSpec& spec, int n, uint64_t seed);

// x_t = alpha_t x0 + sigma_t noise
Vec2 forward_diffuse(const NoiseSchedule& sched, const Vec2& x0, double t, const Vec2& noise);

// forward transition kernel from time u to s >= u:
//   x_s = (alpha_s/alpha_u) x_u + sqrt(sigma_s^2 - (alpha_s/alpha_u)^2 sigma_u^2) noise
// identity at s == u
Vec2 diffuse_between(const NoiseSchedule& sched, const Vec2& x_u, double u, double s,
                     const Vec2& noise);

// Closed-form reference for an isotropic Gaussian source N(mean, stddev^2 I):
// the marginal at time t is N(alpha_t mean, (alpha_t^2 stddev^2 + sigma_t^2) I),
// which gives the exact noise prediction and the exact flow-ODE solution.
struct GaussianOracle {
    Vec2 mean{1.0, 0.5};
    double stddev = 0.5;

    double marginal_var(const NoiseSchedule& sched, double t) const;
    // eps*(x, t) = sigma_t (x - alpha_t mean) / marginal_var(t)
    Vec2 epsilon(const NoiseSchedule& sched, const Vec2& x, double t) const;
    // exact solution of the flow ODE from (x_t, t) to time s
    Vec2 ode_solution(const NoiseSchedule& sched, const Vec2& x_t, double t, double s) const;

    Vec2 sample(StreamRng& rng) const;
};

// Either a mixture or a Gaussian source; lets evaluation and distillation code
// draw data without caring which benchmark is active.
struct DataRef {
    const MixtureSpec* mix = nullptr;
    const GaussianOracle* gauss = nullptr;

    int class_count() const;
    Vec2 sample(int cls, StreamRng& rng) const;
    double data_std() const;
};

}  // namespace pcmlab
