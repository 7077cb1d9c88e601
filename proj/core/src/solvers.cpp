#include "pcmlab/solvers.hpp"

#include <cmath>
#include <stdexcept>

namespace pcmlab {

Vec2 cfg_combine(const Vec2& eps_cond, const Vec2& eps_uncond, double w) {
    return eps_uncond + w * (eps_cond - eps_uncond);
}

Vec2 cfg_epsilon(const CondNet& net, const Vec2& x, double t, int cls, int cls_neg, double w) {
    if (w == 1.0) return net.forward2(x, t, cls);
    return cfg_combine(net.forward2(x, t, cls), net.forward2(x, t, cls_neg), w);
}

EpsilonFn net_epsilon(const CondNet& net, int cls) {
    return [&net, cls](const Vec2& x, double t) { return net.forward2(x, t, cls); };
}

EpsilonFn net_cfg_epsilon(const CondNet& net, int cls, int cls_neg, double w) {
    return [&net, cls, cls_neg, w](const Vec2& x, double t) {
        return cfg_epsilon(net, x, t, cls, cls_neg, w);
    };
}

EpsilonFn oracle_epsilon(const GaussianOracle& oracle, const NoiseSchedule& sched) {
    return [&oracle, &sched](const Vec2& x, double t) { return oracle.epsilon(sched, x, t); };
}

Vec2 TeacherRef::epsilon(const NoiseSchedule& sched, const Vec2& x, double t, int cls,
                         int cls_neg, double w) const {
    if (oracle != nullptr) return oracle->epsilon(sched, x, t);
    if (net != nullptr) return cfg_epsilon(*net, x, t, cls, cls_neg, w);
    throw std::logic_error("teacher ref: no backend attached");
}

EpsilonFn TeacherRef::bind(const NoiseSchedule& sched, int cls, int cls_neg, double w) const {
    if (oracle == nullptr && net == nullptr)
        throw std::logic_error("teacher ref: no backend attached");
    return [this, &sched, cls, cls_neg, w](const Vec2& x, double t) {
        return epsilon(sched, x, t, cls, cls_neg, w);
    };
}

Vec2 ddim_step(const NoiseSchedule& sched, const Vec2& eps_hat, const Vec2& x_t, double t,
               double s) {
    if (s > t) throw std::domain_error("ddim_step: target time after source time");
    auto [at, st] = sched.alpha_sigma(t);
    auto [as, ss] = sched.alpha_sigma(s);
    return (as / at) * (x_t - st * eps_hat) + ss * eps_hat;
}

PhaseMapCoeffs phase_map_coeffs(const NoiseSchedule& sched, double t, double s, bool clip) {
    if (s > t) throw std::domain_error("phase_map: target time after source time");
    auto [at, st] = sched.alpha_sigma(t);
    auto [as, ss] = sched.alpha_sigma(s);
    if (clip && s <= sched.t_min && at < 0.5) {
        // clamped x0 prediction: x_s = alpha_s (x_t - sigma_t eps) / max(alpha_t, 0.5) + sigma_s eps
        return {as / 0.5, ss - as * st / 0.5};
    }
    // e^{-lambda} = sigma/alpha evaluated through the log-SNR route
    double et = std::exp(-sched.log_snr(t));
    double es = std::exp(-sched.log_snr(s));
    return {as / at, -as * (et - es)};
}

Vec2 phase_map(const NoiseSchedule& sched, const Vec2& eps_hat, const Vec2& x_t, double t,
               double s, bool clip) {
    PhaseMapCoeffs c = phase_map_coeffs(sched, t, s, clip);
    return c.x_coeff * x_t + c.eps_coeff * eps_hat;
}

Vec2 solve_k_steps(const NoiseSchedule& sched, const PhasePartition& part, const EpsilonFn& eps,
                   const Vec2& x, int n, int k, bool allow_phase_cross) {
    int top = part.grid.intervals();
    if (k < 0 || n < 0 || n + k > top) throw std::invalid_argument("solve_k_steps: bad indices");
    if (!allow_phase_cross && part.phase_containing(n, n + k) < 0)
        throw std::invalid_argument("solve_k_steps: steps cross a phase edge");
    Vec2 cur = x;
    for (int i = n + k; i > n; --i) {
        double t = part.grid.times[static_cast<size_t>(i)];
        double s = part.grid.times[static_cast<size_t>(i) - 1];
        cur = ddim_step(sched, eps(cur, t), cur, t, s);
    }
    return cur;
}

Vec2 consistency_in_phase(const NoiseSchedule& sched, const PhasePartition& part,
                          const CondNet& net, const Vec2& x, double t, int m, int cls,
                          bool clip) {
    if (m < 0 || m >= part.phases()) throw std::invalid_argument("consistency: bad phase");
    double s = part.edge_time(m);
    if (t < s || t > part.edge_time(m + 1))
        throw std::domain_error("consistency: t outside the requested phase");
    return phase_map(sched, net.forward2(x, t, cls), x, t, s, clip);
}

Vec2 consistency_function(const NoiseSchedule& sched, const PhasePartition& part,
                          const CondNet& net, const Vec2& x, double t, int cls, bool clip) {
    return consistency_in_phase(sched, part, net, x, t, part.phase_of(t), cls, clip);
}

Vec2 consistency_compose(const NoiseSchedule& sched, const PhasePartition& part,
                         const CondNet& net, const Vec2& x, double t, int target_m, int cls,
                         bool clip) {
    if (target_m < 0 || target_m >= part.phases())
        throw std::invalid_argument("consistency: bad target phase");
    int m = part.phase_of(t);
    if (m < target_m) throw std::invalid_argument("consistency: t below the target phase");
    Vec2 cur = consistency_in_phase(sched, part, net, x, t, m, cls, clip);
    for (int p = m - 1; p >= target_m; --p)
        cur = consistency_in_phase(sched, part, net, cur, part.edge_time(p + 1), p, cls, clip);
    return cur;
}

}  // namespace pcmlab
