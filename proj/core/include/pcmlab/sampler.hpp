#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pcmlab/netkit.hpp"
#include "pcmlab/schedule.hpp"
#include "pcmlab/solvers.hpp"

namespace pcmlab {

// per-sample class drawn uniformly from the conditional classes
constexpr int kMixedClass = -2;

// noise prediction as a function of (x, t, class); lets tests count
// evaluations and lets guidance wrap a plain net
using EpsilonPolicy = std::function<Vec2(const Vec2&, double, int)>;

EpsilonPolicy plain_policy(const CondNet& net);
// eps(neg) + w' (eps(cls) - eps(neg)); w' = 1 collapses to the plain policy.
// With neg = null and w' in (0.5, 1] this trades fidelity for diversity.
EpsilonPolicy guided_policy(const CondNet& net, double w_prime, int neg_class = kNullClass);

struct SampleSettings {
    int steps = 4;
    double r = 1.0;   // noise carry-over: 1 deterministic, 0 fully re-drawn
    bool clip = true; // model predicts through the clamped x0 parameterization
    uint64_t seed = 3;
};

struct SampleRun {
    std::vector<Vec2> points;
    std::vector<int> classes;
};

// Descending evaluation times: each phase gets ceil(steps/M) or floor(steps/M)
// sub-steps, uniform in t inside the phase, and the phases earliest in time
// receive the extras.  Every phase needs at least one sub-step, so steps < M
// is rejected.
std::vector<double> build_step_ladder(const PhasePartition& part, int steps);

// One evaluation per phase: repeated application of the phase maps from
// x_T ~ N(0, I) down to the left end of the time range.  cls = kMixedClass
// draws each sample's class uniformly from [0, class_count).
SampleRun sample_deterministic(const NoiseSchedule& sched, const PhasePartition& part,
                               const EpsilonPolicy& eps, int n, int cls, uint64_t seed,
                               bool clip = true, int class_count = 0);

// Interpolated stochastic sampler.  At each ladder step the state moves to
//   x_v = (alpha_v/alpha_t)(x_t - sigma_t eps) + sigma_v (sqrt(r) eps + sqrt(1-r) xi).
// r = 1 never draws xi and reduces to the deterministic sampler when
// steps == phases; r = 0 re-noises from scratch every step.
SampleRun sample_stochastic(const NoiseSchedule& sched, const PhasePartition& part,
                            const EpsilonPolicy& eps, const SampleSettings& cfg, int n, int cls,
                            int class_count = 0);

// initial-noise draw for sample index i (exposed so tests can replay runs)
Vec2 sampler_initial_noise(uint64_t seed, uint64_t index);

}  // namespace pcmlab
