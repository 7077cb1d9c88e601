#include "pcmlab/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "pcmlab/rng.hpp"

namespace pcmlab {

EpsilonPolicy plain_policy(const CondNet& net) {
    return [&net](const Vec2& x, double t, int cls) { return net.forward2(x, t, cls); };
}

EpsilonPolicy guided_policy(const CondNet& net, double w_prime, int neg_class) {
    if (!(w_prime > 0.0)) throw std::invalid_argument("guided_policy: w_prime must be positive");
    if (w_prime == 1.0) return plain_policy(net);
    return [&net, w_prime, neg_class](const Vec2& x, double t, int cls) {
        return cfg_epsilon(net, x, t, cls, neg_class, w_prime);
    };
}

std::vector<double> build_step_ladder(const PhasePartition& part, int steps) {
    const int M = part.phases();
    if (steps < M) throw std::invalid_argument("build_step_ladder: need at least one step per phase");
    std::vector<double> times;
    times.reserve(static_cast<size_t>(steps) + 1);
    times.push_back(part.edge_time(M));
    const int base = steps / M;
    const int extra = steps % M;
    // walk phases from high noise to low; leftover sub-steps go to the earliest phases
    for (int m = M - 1; m >= 0; --m) {
        const int sub = base + (m < extra ? 1 : 0);
        const double hi = part.edge_time(m + 1);
        const double lo = part.edge_time(m);
        for (int j = 1; j < sub; ++j)
            times.push_back(hi + (lo - hi) * static_cast<double>(j) / static_cast<double>(sub));
        times.push_back(lo); // last sub-step lands exactly on the edge
    }
    return times;
}

Vec2 sampler_initial_noise(uint64_t seed, uint64_t index) {
    StreamRng rng(seed, stream::kSampler, index);
    rng.next_u64(); // reserve the class slot so fixed and mixed runs align
    return rng.next_normal2();
}

namespace {

int draw_class(StreamRng& rng, int cls, int class_count) {
    if (cls == kMixedClass) {
        if (class_count < 1)
            throw std::invalid_argument("sampler: mixed-class draws need class_count >= 1");
        return static_cast<int>(rng.next_below(static_cast<uint64_t>(class_count)));
    }
    rng.next_u64(); // burn the class slot so the noise stream is class-independent
    return cls;
}

}  // namespace

SampleRun sample_deterministic(const NoiseSchedule& sched, const PhasePartition& part,
                               const EpsilonPolicy& eps, int n, int cls, uint64_t seed, bool clip,
                               int class_count) {
    if (n < 0) throw std::invalid_argument("sample_deterministic: n must be non-negative");
    const int M = part.phases();
    SampleRun run;
    run.points.resize(static_cast<size_t>(n));
    run.classes.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        StreamRng rng(seed, stream::kSampler, static_cast<uint64_t>(i));
        const int c = draw_class(rng, cls, class_count);
        Vec2 x = rng.next_normal2();
        double t = part.edge_time(M);
        for (int m = M - 1; m >= 0; --m) {
            const Vec2 e = eps(x, t, c);
            x = phase_map(sched, e, x, t, part.edge_time(m), clip);
            t = part.edge_time(m);
        }
        run.points[static_cast<size_t>(i)] = x;
        run.classes[static_cast<size_t>(i)] = c;
    }
    return run;
}

SampleRun sample_stochastic(const NoiseSchedule& sched, const PhasePartition& part,
                            const EpsilonPolicy& eps, const SampleSettings& cfg, int n, int cls,
                            int class_count) {
    if (n < 0) throw std::invalid_argument("sample_stochastic: n must be non-negative");
    if (!(cfg.r >= 0.0 && cfg.r <= 1.0))
        throw std::invalid_argument("sample_stochastic: r must lie in [0, 1]");
    const std::vector<double> ladder = build_step_ladder(part, cfg.steps);
    const double sqrt_r = std::sqrt(cfg.r);
    const double sqrt_1mr = std::sqrt(1.0 - cfg.r);
    SampleRun run;
    run.points.resize(static_cast<size_t>(n));
    run.classes.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        StreamRng rng(cfg.seed, stream::kSampler, static_cast<uint64_t>(i));
        const int c = draw_class(rng, cls, class_count);
        Vec2 x = rng.next_normal2();
        for (size_t j = 0; j + 1 < ladder.size(); ++j) {
            const double t = ladder[j];
            const double v = ladder[j + 1];
            const auto [a_t, s_t] = sched.alpha_sigma(t);
            const auto [a_v, s_v] = sched.alpha_sigma(v);
            const Vec2 e = eps(x, t, c);
            // The divisor clamp tracks the model's own map: inside the lowest
            // phase every x0-prediction targets t_min, so the clamp mirrors the
            // training-side parameterization there; higher phases map to interior
            // edges and stay unclamped, which keeps r = 1 at steps = M identical
            // to the deterministic route.
            const bool final_phase = part.phase_of(t) == 0;
            const double denom = (cfg.clip && final_phase && a_t < 0.5) ? 0.5 : a_t;
            const Vec2 x0 = (x - s_t * e) / denom;
            Vec2 noise_dir = sqrt_r * e;
            if (cfg.r < 1.0) noise_dir = noise_dir + sqrt_1mr * rng.next_normal2();
            x = a_v * x0 + s_v * noise_dir;
        }
        run.points[static_cast<size_t>(i)] = x;
        run.classes[static_cast<size_t>(i)] = c;
    }
    return run;
}

}  // namespace pcmlab
