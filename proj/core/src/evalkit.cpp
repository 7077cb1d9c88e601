#include "pcmlab/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcmlab/rng.hpp"

namespace pcmlab {

namespace {

// empirical quantile of a sorted sample: order statistic at floor(q * n)
double quantile_sorted(const std::vector<double>& v, double q) {
    size_t idx = static_cast<size_t>(q * static_cast<double>(v.size()));
    if (idx >= v.size()) idx = v.size() - 1;
    return v[idx];
}

}  // namespace

double sliced_wasserstein(std::span<const Vec2> a, std::span<const Vec2> b, int projections,
                          uint64_t seed) {
    if (a.empty() || b.empty()) throw std::domain_error("sliced_wasserstein: empty point set");
    if (projections < 1)
        throw std::invalid_argument("sliced_wasserstein: projections must be positive");
    const size_t quantiles = std::max(a.size(), b.size());
    std::vector<double> pa(a.size()), pb(b.size());
    double acc = 0.0;
    for (int p = 0; p < projections; ++p) {
        StreamRng rng(seed, stream::kProjection, static_cast<uint64_t>(p));
        const double phi = rng.next_double() * M_PI; // line directions need half a turn
        const Vec2 dir{std::cos(phi), std::sin(phi)};
        for (size_t i = 0; i < a.size(); ++i) pa[i] = dot(a[i], dir);
        for (size_t i = 0; i < b.size(); ++i) pb[i] = dot(b[i], dir);
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        double w2sq = 0.0;
        for (size_t i = 0; i < quantiles; ++i) {
            const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(quantiles);
            const double d = quantile_sorted(pa, q) - quantile_sorted(pb, q);
            w2sq += d * d;
        }
        acc += w2sq / static_cast<double>(quantiles);
    }
    return std::sqrt(2.0 * acc / static_cast<double>(projections));
}

double self_consistency_residual(const NoiseSchedule& sched, const PhasePartition& part,
                                 const CondNet& student, const TeacherRef& teacher,
                                 const DataRef& data, const ResidualSettings& cfg) {
    return self_consistency_residual(sched, part, plain_policy(student), teacher, data, cfg);
}

double self_consistency_residual(const NoiseSchedule& sched, const PhasePartition& part,
                                 const EpsilonPolicy& student, const TeacherRef& teacher,
                                 const DataRef& data, const ResidualSettings& cfg) {
    if (cfg.n_pairs < 1)
        throw std::invalid_argument("self_consistency_residual: n_pairs must be positive");
    if (cfg.substeps < 1)
        throw std::invalid_argument("self_consistency_residual: substeps must be positive");
    const int classes = data.class_count();
    double acc = 0.0;
    for (int i = 0; i < cfg.n_pairs; ++i) {
        StreamRng rng(cfg.seed, stream::kEval, static_cast<uint64_t>(i));
        const int cls = static_cast<int>(rng.next_below(static_cast<uint64_t>(classes)));
        const Vec2 x0 = data.sample(cls, rng);
        const int m = static_cast<int>(rng.next_below(static_cast<uint64_t>(part.phases())));
        const double lo = part.edge_time(m);
        const double hi = part.edge_time(m + 1);
        double t = rng.next_uniform(lo, hi);
        double u = rng.next_uniform(lo, hi);
        if (u > t) std::swap(t, u);
        const Vec2 noise = rng.next_normal2();
        const Vec2 x_t = forward_diffuse(sched, x0, t, noise);
        Vec2 x_u;
        if (teacher.oracle != nullptr) {
            x_u = teacher.oracle->ode_solution(sched, x_t, t, u);
        } else {
            const EpsilonFn eps = teacher.bind(sched, cls, kNullClass, cfg.w);
            x_u = x_t;
            double cur = t;
            for (int j = 1; j <= cfg.substeps; ++j) {
                const double next =
                    t + (u - t) * static_cast<double>(j) / static_cast<double>(cfg.substeps);
                x_u = ddim_step(sched, eps(x_u, cur), x_u, cur, next);
                cur = next;
            }
        }
        const Vec2 a = phase_map(sched, student(x_t, t, cls), x_t, t, lo, cfg.clip);
        const Vec2 b = phase_map(sched, student(x_u, u, cls), x_u, u, lo, cfg.clip);
        acc += distance(a, b);
    }
    return acc / static_cast<double>(cfg.n_pairs) / data.data_std();
}

double cross_step_consistency(const NoiseSchedule& sched, const PhasePartition& part,
                              const EpsilonPolicy& eps, int cls, int class_count, int steps_a,
                              int steps_b, double r, int n, uint64_t seed, bool clip) {
    SampleSettings sa;
    sa.steps = steps_a;
    sa.r = r;
    sa.clip = clip;
    sa.seed = seed;
    SampleSettings sb = sa;
    sb.steps = steps_b;
    const SampleRun ra = sample_stochastic(sched, part, eps, sa, n, cls, class_count);
    const SampleRun rb = sample_stochastic(sched, part, eps, sb, n, cls, class_count);
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += distance(ra.points[static_cast<size_t>(i)], rb.points[static_cast<size_t>(i)]);
    return n > 0 ? acc / static_cast<double>(n) : 0.0;
}

OrderStudy order_study(const NoiseSchedule& sched, const GaussianOracle& oracle,
                       const std::vector<int>& interval_counts, int n, uint64_t seed) {
    if (interval_counts.size() < 2)
        throw std::invalid_argument("order_study: need at least two interval counts");
    if (n < 1) throw std::invalid_argument("order_study: n must be positive");
    OrderStudy study;
    study.intervals = interval_counts;
    for (const int intervals : interval_counts) {
        const TimestepGrid grid = TimestepGrid::uniform(sched, intervals);
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            StreamRng rng(seed, stream::kEval, static_cast<uint64_t>(i));
            const Vec2 x0 = oracle.sample(rng);
            const Vec2 xi = rng.next_normal2();
            const Vec2 x_start = forward_diffuse(sched, x0, sched.t_max, xi);
            const Vec2 exact = oracle.ode_solution(sched, x_start, sched.t_max, sched.t_min);
            Vec2 x = x_start;
            for (int j = intervals; j >= 1; --j) {
                const double t = grid.times[static_cast<size_t>(j)];
                const double s = grid.times[static_cast<size_t>(j) - 1];
                x = ddim_step(sched, oracle.epsilon(sched, x, t), x, t, s);
            }
            err += distance(x, exact);
        }
        study.errors.push_back(err / static_cast<double>(n));
    }
    // least squares of log(error) against log(1/N)
    const size_t k = interval_counts.size();
    double su = 0.0, sy = 0.0, suu = 0.0, suy = 0.0;
    for (size_t i = 0; i < k; ++i) {
        const double u = -std::log(static_cast<double>(interval_counts[i]));
        const double y = std::log(study.errors[i]);
        su += u;
        sy += y;
        suu += u * u;
        suy += u * y;
    }
    const double denom = suu - su * su / static_cast<double>(k);
    study.slope = (suy - su * sy / static_cast<double>(k)) / denom;
    return study;
}

bool IdentityReport::all_pass() const {
    for (const IdentityCheck& c : checks)
        if (!c.pass) return false;
    return true;
}

IdentityReport verify_identities(uint64_t seed) {
    IdentityReport report;
    NoiseSchedule sched;

    {
        IdentityCheck c{"solver-route-agreement", 10000, 0.0, 1e-10, false};
        for (int i = 0; i < c.n; ++i) {
            StreamRng rng(seed, stream::kEval, static_cast<uint64_t>(i));
            double t = rng.next_uniform(sched.t_min, sched.t_max);
            double s = rng.next_uniform(sched.t_min, sched.t_max);
            if (s > t) std::swap(s, t); // both routes map backward in time
            const Vec2 x = 3.0 * rng.next_normal2();
            const Vec2 eps = rng.next_normal2();
            const double dev =
                distance(ddim_step(sched, eps, x, t, s), phase_map(sched, eps, x, t, s));
            c.max_dev = std::max(c.max_dev, dev);
        }
        c.pass = c.max_dev < c.tol;
        report.checks.push_back(c);
    }

    {
        const PhasePartition part = PhasePartition::uniform(TimestepGrid::uniform(sched, 50), 4);
        NetConfig ncfg;
        CondNet net(ncfg);
        net.init_params(seed + 1);
        IdentityCheck c{"phase-boundary-identity", 0, 0.0, 1e-12, false};
        for (int m = 0; m < part.phases(); ++m) {
            const double s_m = part.edge_time(m);
            for (int i = 0; i < 1000; ++i) {
                StreamRng rng(seed, stream::kEval, static_cast<uint64_t>(m * 1000 + i));
                const Vec2 x = 3.0 * rng.next_normal2();
                const Vec2 eps = rng.next_normal2();
                const int cls = i % 3 - 1; // cycle null and both classes
                const double dev_map = distance(phase_map(sched, eps, x, s_m, s_m), x);
                const double dev_net =
                    distance(consistency_in_phase(sched, part, net, x, s_m, m, cls), x);
                c.max_dev = std::max({c.max_dev, dev_map, dev_net});
                c.n += 1;
            }
        }
        c.pass = c.max_dev < c.tol;
        report.checks.push_back(c);
    }

    {
        IdentityCheck c{"guidance-rescale", 10000, 0.0, 1e-12, false};
        for (int i = 0; i < c.n; ++i) {
            StreamRng rng(seed, stream::kEval, static_cast<uint64_t>(i) + 0x100000);
            const Vec2 e_c = rng.next_normal2();    // conditional prediction
            const Vec2 e_neg = rng.next_normal2();  // negative-condition prediction
            const Vec2 e_null = rng.next_normal2(); // unconditional prediction
            const double w = rng.next_uniform(1.0, 3.0);
            const double wp = rng.next_uniform(0.5, 3.0);
            // a guidance-distilled model predicts the teacher's guided epsilon
            const Vec2 hat_c = cfg_combine(e_c, e_null, w);
            const Vec2 hat_neg = cfg_combine(e_neg, e_null, w);
            const Vec2 lhs = cfg_combine(hat_c, hat_neg, wp);
            const double a = (w - 1.0) / (w * wp);
            const Vec2 merged = (1.0 - a) * e_neg + a * e_null;
            const Vec2 rhs = w * wp * (e_c - merged) + e_neg;
            c.max_dev = std::max(c.max_dev, distance(lhs, rhs));
        }
        c.pass = c.max_dev < c.tol;
        report.checks.push_back(c);
    }

    {
        IdentityCheck c{"noise-mix-variance", 1001, 0.0, 1e-15, false};
        for (int i = 0; i <= 1000; ++i) {
            const double r = static_cast<double>(i) / 1000.0;
            const double sr = std::sqrt(r), sq = std::sqrt(1.0 - r);
            c.max_dev = std::max(c.max_dev, std::fabs(sr * sr + sq * sq - 1.0));
        }
        c.pass = c.max_dev < c.tol;
        report.checks.push_back(c);
    }

    return report;
}

PairingStudy pairing_discriminator_loss(const NoiseSchedule& sched, const PhasePartition& part,
                                        const CondNet& student, const TeacherRef& teacher,
                                        const DataRef& data, const DataRef& reference,
                                        const DistillSettings& dcfg, const PairingSettings& cfg) {
    if (cfg.train_steps < 1 || cfg.batch < 1 || cfg.eval_pairs < 1)
        throw std::invalid_argument("pairing_discriminator_loss: counts must be positive");

    const auto build_pair = [&](uint64_t draw_index) -> AdvPair {
        const DistillDraw d =
            draw_training_example(sched, part, data, dcfg, cfg.seed, draw_index);
        if (cfg.kind == PairingKind::SelfConsistent) {
            // both branches from the same converged model, re-noised identically
            return adversarial_pair(sched, part, dcfg, student, student, teacher, d.tup, d.s_adv,
                                    d.xi_fake, d.xi_real);
        }
        // phase output against the mismatched reference source at the edge
        const double s_m = part.edge_time(d.tup.m);
        const double t_hi = part.grid.times[static_cast<size_t>(d.tup.n + dcfg.solver_steps)];
        const Vec2 f_st = phase_map(sched, student.forward2(d.tup.x_hi, t_hi, d.tup.cls),
                                    d.tup.x_hi, t_hi, s_m, dcfg.clip_in_training);
        StreamRng rng(cfg.seed, stream::kEval, draw_index);
        const int rcls =
            d.tup.cls == kNullClass
                ? static_cast<int>(rng.next_below(static_cast<uint64_t>(reference.class_count())))
                : d.tup.cls;
        const Vec2 y0 = reference.sample(rcls, rng);
        AdvPair pair;
        pair.fake_s = f_st;
        pair.real_s = forward_diffuse(sched, y0, s_m, rng.next_normal2());
        pair.s = s_m;
        pair.cls = d.tup.cls;
        return pair;
    };

    NetConfig disc_cfg = student.config();
    disc_cfg.out_dim = 1;
    TrainState disc(disc_cfg, cfg.seed + 1, 0.99);
    std::vector<double> grad(static_cast<size_t>(disc.net.param_count()));
    CondNet::Trace tr;
    uint64_t draw = 0;
    const double inv_batch = 1.0 / static_cast<double>(cfg.batch);
    for (int step = 0; step < cfg.train_steps; ++step) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (int j = 0; j < cfg.batch; ++j) {
            const AdvPair pair = build_pair(draw++);
            double in[2] = {pair.fake_s.x, pair.fake_s.y};
            double out = 0.0;
            disc.net.forward_trace(in, pair.s, pair.cls, &out, tr);
            if (1.0 + out > 0.0) {
                const double adj = inv_batch; // d relu(1 + D(fake)) / dD
                disc.net.backward(tr, &adj, grad.data(), nullptr);
            }
            in[0] = pair.real_s.x;
            in[1] = pair.real_s.y;
            disc.net.forward_trace(in, pair.s, pair.cls, &out, tr);
            if (1.0 - out > 0.0) {
                const double adj = -inv_batch; // d relu(1 - D(real)) / dD
                disc.net.backward(tr, &adj, grad.data(), nullptr);
            }
        }
        disc.adam_step(grad, cfg.lr);
    }

    PairingStudy study;
    study.n_eval = cfg.eval_pairs;
    double acc = 0.0;
    for (int i = 0; i < cfg.eval_pairs; ++i) {
        const AdvPair pair = build_pair(draw++);
        acc += adversarial_hinge(disc.net, pair).second;
    }
    study.heldout_hinge = acc / static_cast<double>(cfg.eval_pairs);
    return study;
}

double negative_mode_fraction(const NoiseSchedule& sched, const PhasePartition& part,
                              const CondNet& student, const MixtureSpec& mix, int cls, int neg_cls,
                              double w_prime, int n, uint64_t seed, bool clip) {
    if (n < 1) throw std::invalid_argument("negative_mode_fraction: n must be positive");
    const EpsilonPolicy policy = guided_policy(student, w_prime, neg_cls);
    const SampleRun run = sample_deterministic(sched, part, policy, n, cls, seed, clip);
    const std::vector<MixtureSpec::Mode> modes = mix.modes();
    int hits = 0;
    for (const Vec2& p : run.points)
        if (modes[static_cast<size_t>(nearest_mode(modes, p))].cls == neg_cls) ++hits;
    return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace pcmlab
