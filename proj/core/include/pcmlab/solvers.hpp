#pragma once

#include <functional>
#include <span>

#include "pcmlab/netkit.hpp"
#include "pcmlab/schedule.hpp"
#include "pcmlab/toydata.hpp"
#include "pcmlab/vec2.hpp"

namespace pcmlab {

// eps_uncond + w * (eps_cond - eps_uncond)
Vec2 cfg_combine(const Vec2& eps_cond, const Vec2& eps_uncond, double w);

// guided prediction of a conditional net; single evaluation when w == 1
Vec2 cfg_epsilon(const CondNet& net, const Vec2& x, double t, int cls, int cls_neg, double w);

using EpsilonFn = std::function<Vec2(const Vec2&, double)>;

EpsilonFn net_epsilon(const CondNet& net, int cls);
EpsilonFn net_cfg_epsilon(const CondNet& net, int cls, int cls_neg, double w);
EpsilonFn oracle_epsilon(const GaussianOracle& oracle, const NoiseSchedule& sched);

// A teacher is either a trained net (guided per tuple) or the exact Gaussian
// reference, which ignores conditioning and guidance entirely.
struct TeacherRef {
    const CondNet* net = nullptr;
    const GaussianOracle* oracle = nullptr;

    Vec2 epsilon(const NoiseSchedule& sched, const Vec2& x, double t, int cls, int cls_neg,
                 double w) const;
    EpsilonFn bind(const NoiseSchedule& sched, int cls, int cls_neg, double w) const;
};

// One reverse DDIM step: x_s = alpha_s (x_t - sigma_t eps) / alpha_t + sigma_s eps.
Vec2 ddim_step(const NoiseSchedule& sched, const Vec2& eps_hat, const Vec2& x_t, double t,
               double s);

// Affine coefficients of the exact-solution parameterization
//   x_s = (alpha_s/alpha_t) x_t - alpha_s (e^{-lambda_t} - e^{-lambda_s}) eps.
// Algebraically identical to ddim_step but evaluated through log-SNR, so the
// two routes cross-check each other.  With clip active and s at the left end
// of the time range, the x0-prediction divisor is clamped to max(alpha_t, 0.5).
struct PhaseMapCoeffs {
    double x_coeff;
    double eps_coeff;
};
PhaseMapCoeffs phase_map_coeffs(const NoiseSchedule& sched, double t, double s, bool clip);

Vec2 phase_map(const NoiseSchedule& sched, const Vec2& eps_hat, const Vec2& x_t, double t,
               double s, bool clip = false);

// k reverse DDIM steps along the grid, from index n + k down to n.  Crossing a
// phase edge is a contract error unless explicitly allowed (full-trajectory
// reference solves set allow_phase_cross).
Vec2 solve_k_steps(const NoiseSchedule& sched, const PhasePartition& part, const EpsilonFn& eps,
                   const Vec2& x, int n, int k, bool allow_phase_cross = false);

// f^m: map x_t to the left edge of phase m via phase_map with the net's eps.
Vec2 consistency_in_phase(const NoiseSchedule& sched, const PhasePartition& part,
                          const CondNet& net, const Vec2& x, double t, int m, int cls,
                          bool clip = false);

// phase chosen from t (a t exactly on an interior edge maps within the phase below)
Vec2 consistency_function(const NoiseSchedule& sched, const PhasePartition& part,
                          const CondNet& net, const Vec2& x, double t, int cls,
                          bool clip = false);

// composition f^{m'} o ... o f^m down to the left edge of phase target_m
Vec2 consistency_compose(const NoiseSchedule& sched, const PhasePartition& part,
                         const CondNet& net, const Vec2& x, double t, int target_m, int cls,
                         bool clip = false);

}  // namespace pcmlab
