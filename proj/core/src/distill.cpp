#include "pcmlab/distill.hpp"

#include <cmath>
#include <stdexcept>

#include "pcmlab/checkpoint.hpp"
#include "pcmlab/rng.hpp"

namespace pcmlab {

void DistillSettings::validate() const {
    if (phases < 1) throw std::invalid_argument("distill: phases must be positive");
    if (solver_steps < 1) throw std::invalid_argument("distill: solver_steps must be positive");
    if (!(w_min >= 1.0) || w_max < w_min) throw std::invalid_argument("distill: bad guidance range");
    if (drop_ratio < 0.0 || drop_ratio > 1.0) throw std::invalid_argument("distill: bad drop ratio");
    if (!(huber_delta > 0.0)) throw std::invalid_argument("distill: huber delta must be positive");
    if (lambda_weight < 0.0 || lambda_adv < 0.0)
        throw std::invalid_argument("distill: negative loss weight");
    if (batch < 1 || iterations < 0) throw std::invalid_argument("distill: bad batch/iterations");
    if (!(lr > 0.0)) throw std::invalid_argument("distill: bad learning rate");
    if (ema_mu < 0.0 || ema_mu > 1.0) throw std::invalid_argument("distill: ema_mu outside [0, 1]");
}

void TeacherTrainSettings::validate() const {
    if (batch < 1 || iterations < 0) throw std::invalid_argument("teacher: bad batch/iterations");
    if (!(lr > 0.0)) throw std::invalid_argument("teacher: bad learning rate");
    if (cond_dropout < 0.0 || cond_dropout > 1.0)
        throw std::invalid_argument("teacher: bad condition dropout");
}

CondNet train_teacher(const NoiseSchedule& sched, const DataRef& data, const NetConfig& net_cfg,
                      const TeacherTrainSettings& cfg, std::vector<LossRow>* log) {
    cfg.validate();
    TrainState state(net_cfg, cfg.seed, 0.0);
    std::vector<double> grad(static_cast<size_t>(state.net.param_count()));
    CondNet::Trace tr;
    int classes = data.class_count();
    for (int64_t it = 0; it < cfg.iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            uint64_t idx = static_cast<uint64_t>(it) * static_cast<uint64_t>(cfg.batch) +
                           static_cast<uint64_t>(b);
            StreamRng rng(cfg.seed, stream::kTeacherStep, idx);
            int cls = static_cast<int>(rng.next_below(static_cast<uint64_t>(classes)));
            Vec2 x0 = data.sample(cls, rng);
            double t = rng.next_uniform(sched.t_min, sched.t_max);
            Vec2 eps = rng.next_normal2();
            if (rng.next_double() < cfg.cond_dropout) cls = kNullClass;
            Vec2 xt = forward_diffuse(sched, x0, t, eps);
            double in[2] = {xt.x, xt.y};
            double out[2];
            state.net.forward_trace(in, t, cls, out, tr);
            Vec2 diff{out[0] - eps.x, out[1] - eps.y};
            loss += dot(diff, diff);
            double adj[2] = {2.0 * diff.x / cfg.batch, 2.0 * diff.y / cfg.batch};
            state.net.backward(tr, adj, grad.data(), nullptr);
        }
        loss /= cfg.batch;
        if (!std::isfinite(loss)) throw std::runtime_error("teacher: loss diverged");
        double gn = l2_norm(grad);
        state.adam_step(grad, cfg.lr);
        if (log != nullptr) log->push_back({it, loss, 0.0, 0.0, gn});
    }
    return std::move(state.net);
}

DistillDraw draw_training_example(const NoiseSchedule& sched, const PhasePartition& part,
                                  const DataRef& data, const DistillSettings& cfg, uint64_t seed,
                                  uint64_t sample_index) {
    StreamRng rng(seed, stream::kDistillStep, sample_index);
    DistillDraw d;
    int classes = data.class_count();
    d.tup.cls = static_cast<int>(rng.next_below(static_cast<uint64_t>(classes)));
    Vec2 x0 = data.sample(d.tup.cls, rng);
    int m = static_cast<int>(rng.next_below(static_cast<uint64_t>(part.phases())));
    int lo = part.edges[static_cast<size_t>(m)];
    int hi = part.edges[static_cast<size_t>(m) + 1];
    int span = hi - lo - cfg.solver_steps + 1; // count of valid n with n + k inside the phase
    if (span < 1) throw std::invalid_argument("distill: solver_steps exceeds a phase length");
    d.tup.m = m;
    d.tup.n = lo + static_cast<int>(rng.next_below(static_cast<uint64_t>(span)));
    Vec2 noise = rng.next_normal2();
    double t_hi = part.grid.times[static_cast<size_t>(d.tup.n + cfg.solver_steps)];
    d.tup.x_hi = forward_diffuse(sched, x0, t_hi, noise);
    d.tup.w = 1.0;
    if (cfg.mode == DistillMode::Pcd) {
        d.tup.w = rng.next_uniform(cfg.w_min, cfg.w_max);
    } else {
        // pcd-star: occasionally drop the condition for the whole tuple
        if (rng.next_double() < cfg.drop_ratio) d.tup.cls = kNullClass;
    }
    d.s_adv = rng.next_uniform(part.edge_time(m), part.edge_time(m + 1));
    d.xi_fake = rng.next_normal2();
    d.xi_real = rng.next_normal2();
    return d;
}

double metric_value(Metric metric, double huber_delta, const Vec2& diff) {
    double q = dot(diff, diff);
    if (metric == Metric::SquaredL2) return q;
    return std::sqrt(q + huber_delta * huber_delta) - huber_delta;
}

Vec2 metric_grad(Metric metric, double huber_delta, const Vec2& diff) {
    if (metric == Metric::SquaredL2) return 2.0 * diff;
    double q = dot(diff, diff);
    return (1.0 / std::sqrt(q + huber_delta * huber_delta)) * diff;
}

namespace {

// teacher state solved k grid steps down from t_{n+k}, guided per the tuple
Vec2 teacher_solve(const NoiseSchedule& sched, const PhasePartition& part,
                   const DistillSettings& cfg, const TeacherRef& teacher, const TrainTuple& tup,
                   int k) {
    double w = (cfg.mode == DistillMode::Pcd) ? tup.w : 1.0;
    EpsilonFn eps = teacher.bind(sched, tup.cls, kNullClass, w);
    return solve_k_steps(sched, part, eps, tup.x_hi, tup.n, k);
}

// lambda(t) of the training objective, evaluated per tuple
double tuple_weight(const DistillSettings& cfg, const PhaseMapCoeffs& ch) {
    if (cfg.weight_mode == WeightMode::InverseMapGain)
        return cfg.lambda_weight / (ch.eps_coeff * ch.eps_coeff);
    return cfg.lambda_weight;
}

}  // namespace

double pcm_loss(const NoiseSchedule& sched, const PhasePartition& part,
                const DistillSettings& cfg, const CondNet& student, const CondNet& target,
                const TeacherRef& teacher, std::span<const TrainTuple> batch,
                std::vector<double>* grad) {
    if (batch.empty()) throw std::invalid_argument("pcm_loss: empty batch");
    if (grad != nullptr) grad->assign(static_cast<size_t>(student.param_count()), 0.0);
    int k = cfg.solver_steps;
    bool clip = cfg.clip_in_training;
    CondNet::Trace tr;
    double total = 0.0;
    for (const TrainTuple& tup : batch) {
        if (part.phase_containing(tup.n, tup.n + k) != tup.m)
            throw std::invalid_argument("pcm_loss: tuple crosses a phase edge");
        double t_hi = part.grid.times[static_cast<size_t>(tup.n + k)];
        double t_lo = part.grid.times[static_cast<size_t>(tup.n)];
        double s_m = part.edge_time(tup.m);
        PhaseMapCoeffs ch = phase_map_coeffs(sched, t_hi, s_m, clip);
        double in[2] = {tup.x_hi.x, tup.x_hi.y};
        double eps_s[2];
        student.forward_trace(in, t_hi, tup.cls, eps_s, tr);
        Vec2 f_st = ch.x_coeff * tup.x_hi + ch.eps_coeff * Vec2{eps_s[0], eps_s[1]};
        Vec2 x_lo = teacher_solve(sched, part, cfg, teacher, tup, k);
        Vec2 f_tg = phase_map(sched, target.forward2(x_lo, t_lo, tup.cls), x_lo, t_lo, s_m, clip);
        Vec2 diff = f_st - f_tg;
        const double lam = tuple_weight(cfg, ch);
        total += lam * metric_value(cfg.metric, cfg.huber_delta, diff);
        if (grad != nullptr) {
            Vec2 g = metric_grad(cfg.metric, cfg.huber_delta, diff);
            double scale = lam * ch.eps_coeff / double(batch.size());
            double adj[2] = {scale * g.x, scale * g.y};
            student.backward(tr, adj, grad->data(), nullptr);
        }
    }
    return total / double(batch.size());
}

AdvPair adversarial_pair(const NoiseSchedule& sched, const PhasePartition& part,
                         const DistillSettings& cfg, const CondNet& student,
                         const CondNet& target, const TeacherRef& teacher, const TrainTuple& tup,
                         double s, const Vec2& xi_fake, const Vec2& xi_real) {
    int k = cfg.solver_steps;
    double t_hi = part.grid.times[static_cast<size_t>(tup.n + k)];
    double t_lo = part.grid.times[static_cast<size_t>(tup.n)];
    double s_m = part.edge_time(tup.m);
    if (s < s_m || s > part.edge_time(tup.m + 1))
        throw std::domain_error("adversarial_pair: s outside the tuple's phase");
    bool clip = cfg.clip_in_training;
    Vec2 f_st = phase_map(sched, student.forward2(tup.x_hi, t_hi, tup.cls), tup.x_hi, t_hi, s_m, clip);
    Vec2 x_lo = teacher_solve(sched, part, cfg, teacher, tup, k);
    Vec2 f_tg = phase_map(sched, target.forward2(x_lo, t_lo, tup.cls), x_lo, t_lo, s_m, clip);
    AdvPair pair;
    pair.fake_s = diffuse_between(sched, f_st, s_m, s, xi_fake);
    pair.real_s = diffuse_between(sched, f_tg, s_m, s, xi_real);
    pair.s = s;
    pair.cls = tup.cls;
    return pair;
}

std::pair<double, double> adversarial_hinge(const CondNet& disc, const AdvPair& pair) {
    double d_fake = disc.forward1(pair.fake_s, pair.s, pair.cls);
    double d_real = disc.forward1(pair.real_s, pair.s, pair.cls);
    double gen = -d_fake;
    double dl = std::max(0.0, 1.0 + d_fake) + std::max(0.0, 1.0 - d_real);
    return {gen, dl};
}

DistillResult distill(const NoiseSchedule& sched, const PhasePartition& part,
                      const DataRef& data, const TeacherRef& teacher, const NetConfig& net_cfg,
                      const DistillSettings& cfg, const std::string& crash_dump_path) {
    cfg.validate();
    if (part.phases() != cfg.phases)
        throw std::invalid_argument("distill: partition phase count differs from settings");
    for (int m = 0; m < part.phases(); ++m)
        if (part.edges[static_cast<size_t>(m) + 1] - part.edges[static_cast<size_t>(m)] <
            cfg.solver_steps)
            throw std::invalid_argument("distill: solver_steps exceeds a phase length");

    TrainState student(net_cfg, cfg.seed, cfg.ema_mu);
    if (teacher.net != nullptr && teacher.net->param_count() == student.net.param_count())
        student.net.params() = teacher.net->params(); // warm start from the teacher
    student.ema.params() = student.net.params();

    NetConfig disc_cfg = net_cfg;
    disc_cfg.out_dim = 1;
    TrainState disc(disc_cfg, cfg.seed + 1, cfg.ema_mu);

    bool use_adv = cfg.lambda_adv > 0.0;
    int k = cfg.solver_steps;
    std::vector<double> g_student(static_cast<size_t>(student.net.param_count()));
    std::vector<double> g_disc(static_cast<size_t>(disc.net.param_count()));
    CondNet::Trace tr_student, tr_fake, tr_real;
    std::vector<LossRow> log;
    log.reserve(static_cast<size_t>(cfg.iterations));

    auto dump_crash = [&](int64_t it) {
        if (crash_dump_path.empty()) return;
        Checkpoint ck = make_student_checkpoint(sched, part, student, it);
        save_checkpoint(ck, crash_dump_path);
    };

    for (int64_t it = 0; it < cfg.iterations; ++it) {
        std::fill(g_student.begin(), g_student.end(), 0.0);
        std::fill(g_disc.begin(), g_disc.end(), 0.0);
        double l_pcm = 0.0, l_gen = 0.0, l_disc = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            uint64_t idx = static_cast<uint64_t>(it) * static_cast<uint64_t>(cfg.batch) +
                           static_cast<uint64_t>(b);
            DistillDraw d = draw_training_example(sched, part, data, cfg, cfg.seed, idx);
            const TrainTuple& tup = d.tup;
            double t_hi = part.grid.times[static_cast<size_t>(tup.n + k)];
            double t_lo = part.grid.times[static_cast<size_t>(tup.n)];
            double s_m = part.edge_time(tup.m);
            PhaseMapCoeffs ch = phase_map_coeffs(sched, t_hi, s_m, cfg.clip_in_training);

            double in[2] = {tup.x_hi.x, tup.x_hi.y};
            double eps_s[2];
            student.net.forward_trace(in, t_hi, tup.cls, eps_s, tr_student);
            Vec2 f_st = ch.x_coeff * tup.x_hi + ch.eps_coeff * Vec2{eps_s[0], eps_s[1]};

            Vec2 x_lo = teacher_solve(sched, part, cfg, teacher, tup, k);
            Vec2 f_tg = phase_map(sched, student.ema.forward2(x_lo, t_lo, tup.cls), x_lo, t_lo,
                                  s_m, cfg.clip_in_training);

            Vec2 diff = f_st - f_tg;
            const double lam = tuple_weight(cfg, ch);
            l_pcm += lam * metric_value(cfg.metric, cfg.huber_delta, diff);
            Vec2 g = metric_grad(cfg.metric, cfg.huber_delta, diff);
            double scale = lam * ch.eps_coeff / double(cfg.batch);
            Vec2 adj_eps = scale * g; // dL/deps through the phase map

            if (use_adv) {
                // both predictions pushed to the shared noise level s
                auto [a_sm, s_sm] = sched.alpha_sigma(s_m);
                auto [a_s, s_s] = sched.alpha_sigma(d.s_adv);
                double kap = a_s / a_sm;
                double tau = std::sqrt(std::max(s_s * s_s - kap * kap * s_sm * s_sm, 0.0));
                Vec2 fake = kap * f_st + tau * d.xi_fake;
                Vec2 real = kap * f_tg + tau * d.xi_real;

                double fin[2] = {fake.x, fake.y};
                double rin[2] = {real.x, real.y};
                double d_fake, d_real;
                disc.net.forward_trace(fin, d.s_adv, tup.cls, &d_fake, tr_fake);
                disc.net.forward_trace(rin, d.s_adv, tup.cls, &d_real, tr_real);

                l_gen += -d_fake;
                l_disc += std::max(0.0, 1.0 + d_fake) + std::max(0.0, 1.0 - d_real);

                // discriminator hinge gradients
                if (1.0 + d_fake > 0.0) {
                    double one = 1.0 / double(cfg.batch);
                    disc.net.backward(tr_fake, &one, g_disc.data(), nullptr);
                }
                if (1.0 - d_real > 0.0) {
                    double neg = -1.0 / double(cfg.batch);
                    disc.net.backward(tr_real, &neg, g_disc.data(), nullptr);
                }
                // generator chain: d(-D(fake))/dfake, discriminator held fixed
                double gen_adj = -1.0;
                double x_adj[2];
                disc.net.backward(tr_fake, &gen_adj, nullptr, x_adj);
                double cscale = cfg.lambda_adv * kap * ch.eps_coeff / double(cfg.batch);
                adj_eps += cscale * Vec2{x_adj[0], x_adj[1]};
            }

            double adj[2] = {adj_eps.x, adj_eps.y};
            student.net.backward(tr_student, adj, g_student.data(), nullptr);
        }
        l_pcm /= cfg.batch;
        l_gen /= cfg.batch;
        l_disc /= cfg.batch;
        if (!std::isfinite(l_pcm) || !std::isfinite(l_gen) || !std::isfinite(l_disc)) {
            dump_crash(it);
            throw std::runtime_error("distill: loss diverged at step " + std::to_string(it));
        }
        double gn = l2_norm(g_student);
        student.adam_step(g_student, cfg.lr);
        student.ema_update();
        // the discriminator runs faster than the student so it stays ahead
        if (use_adv) disc.adam_step(g_disc, 5.0 * cfg.lr);
        log.push_back({it, l_pcm, use_adv ? l_gen : 0.0, use_adv ? l_disc : 0.0, gn});
    }
    return {std::move(student), std::move(disc), std::move(log)};
}

}  // namespace pcmlab
