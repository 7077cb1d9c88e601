#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcmlab/netkit.hpp"
#include "pcmlab/schedule.hpp"
#include "pcmlab/solvers.hpp"
#include "pcmlab/toydata.hpp"

namespace pcmlab {

enum class DistillMode { Pcd, PcdStar };
enum class Metric { SquaredL2, PseudoHuber };

// Per-tuple loss weighting lambda(t).  Constant keeps the raw prediction-space
// metric.  InverseMapGain divides by the squared epsilon coefficient of the
// student's phase map, which measures the mismatch in epsilon space instead;
// that keeps single-phase training well conditioned where the map gain spans
// two orders of magnitude across the trajectory.
enum class WeightMode { Constant, InverseMapGain };

struct DistillSettings {
    DistillMode mode = DistillMode::Pcd;
    int phases = 4;
    int solver_steps = 1;       // k
    double w_min = 1.0;         // guidance range for the teacher solve (pcd)
    double w_max = 2.0;
    double drop_ratio = 0.1;    // condition drop probability (pcd-star)
    Metric metric = Metric::SquaredL2;
    double huber_delta = 0.1;
    double lambda_weight = 1.0; // scalar loss weighting
    WeightMode weight_mode = WeightMode::Constant;
    double lambda_adv = 0.1;    // adversarial loss weight; 0 disables the discriminator
    int batch = 256;
    int iterations = 5000;
    double lr = 2e-4;
    double ema_mu = 0.99;
    bool clip_in_training = false; // x0 clamp is an inference-side guard by default
    uint64_t seed = 2;

    void validate() const;
};

struct TeacherTrainSettings {
    int iterations = 5000;
    int batch = 256;
    double lr = 1e-3;
    double cond_dropout = 0.1;
    uint64_t seed = 1;

    void validate() const;
};

struct LossRow {
    int64_t step = 0;
    double l_pcm = 0.0;
    double l_adv_gen = 0.0;
    double l_adv_disc = 0.0;
    double grad_norm = 0.0;
};

// Plain epsilon matching on forward-diffused data, t uniform over the schedule
// range, with unconditional embedding training via condition dropout.
CondNet train_teacher(const NoiseSchedule& sched, const DataRef& data, const NetConfig& net_cfg,
                      const TeacherTrainSettings& cfg, std::vector<LossRow>* log = nullptr);

// One training example: x_hi sits at grid time t_{n+k} inside phase m.  For
// pcd, w is the guidance scale of the teacher solve; for pcd-star the class
// may already have been replaced by the null condition.
struct TrainTuple {
    int m = 0;
    int n = 0;
    Vec2 x_hi;
    int cls = 0;
    double w = 1.0;
};

// Deterministic per-sample draw; the stream index fixes every random choice,
// so results do not depend on batch composition.  Adversarial extras (shared
// noise time s and the two re-noising draws) come from the same stream after
// the tuple fields, which keeps tuples identical whether or not the
// adversarial path is enabled.
struct DistillDraw {
    TrainTuple tup;
    double s_adv = 0.0;
    Vec2 xi_fake, xi_real;
};
DistillDraw draw_training_example(const NoiseSchedule& sched, const PhasePartition& part,
                                  const DataRef& data, const DistillSettings& cfg, uint64_t seed,
                                  uint64_t sample_index);

double metric_value(Metric metric, double huber_delta, const Vec2& diff);
Vec2 metric_grad(Metric metric, double huber_delta, const Vec2& diff);

// Consistency loss over a batch of tuples: mean of
//   lambda_weight * d(f_theta^m(x_hi, t_hi), f_target^m(solve_k(x_hi), t_lo)).
// The target branch is evaluated value-only (no gradient flows into it); if
// grad is non-null, dL/dtheta accumulates there (resized and zeroed first).
double pcm_loss(const NoiseSchedule& sched, const PhasePartition& part,
                const DistillSettings& cfg, const CondNet& student, const CondNet& target,
                const TeacherRef& teacher, std::span<const TrainTuple> batch,
                std::vector<double>* grad = nullptr);

// Both branches of a tuple pushed to the shared noise level s via the forward
// kernel; at s == s_m the pair equals the raw phase predictions.
struct AdvPair {
    Vec2 fake_s; // from f_theta(x_hi)
    Vec2 real_s; // from f_target(teacher solve)
    double s = 0.0;
    int cls = 0;
};
AdvPair adversarial_pair(const NoiseSchedule& sched, const PhasePartition& part,
                         const DistillSettings& cfg, const CondNet& student,
                         const CondNet& target, const TeacherRef& teacher, const TrainTuple& tup,
                         double s, const Vec2& xi_fake, const Vec2& xi_real);

// hinge pair: generator loss -D(fake), discriminator loss relu(1 + D(fake)) + relu(1 - D(real))
std::pair<double, double> adversarial_hinge(const CondNet& disc, const AdvPair& pair);

struct DistillResult {
    TrainState student;
    TrainState disc;
    std::vector<LossRow> log;
};

// Full distillation loop (consistency loss plus optional adversarial loss,
// simultaneous Adam updates, EMA target).  On a non-finite loss the current
// parameters are dumped to crash_dump_path (when non-empty) before throwing.
DistillResult distill(const NoiseSchedule& sched, const PhasePartition& part,
                      const DataRef& data, const TeacherRef& teacher, const NetConfig& net_cfg,
                      const DistillSettings& cfg, const std::string& crash_dump_path = "");

}  // namespace pcmlab
