#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcmlab/netkit.hpp"
#include "pcmlab/schedule.hpp"

namespace pcmlab {

struct TrainState;

enum class CkptKind { Teacher, Student, Discriminator };

// Serialized training artifact.  Student checkpoints carry the EMA weights
// (the net that actually samples), teachers carry their plain weights.
struct Checkpoint {
    int version = 1;
    CkptKind kind = CkptKind::Student;
    NoiseSchedule sched;
    int grid_points = 50;
    std::vector<int> partition; // phase edge indices
    NetConfig net_cfg;
    std::vector<double> params;
    int64_t step = 0;
    double ema_mu = 0.0;
};

// JSON with every number at 17 significant digits, so save/load/save is
// byte-identical.
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

CondNet net_of(const Checkpoint& ck);
PhasePartition partition_of(const Checkpoint& ck);

Checkpoint make_teacher_checkpoint(const NoiseSchedule& sched, int grid_points,
                                   const CondNet& net, int64_t step);
Checkpoint make_student_checkpoint(const NoiseSchedule& sched, const PhasePartition& part,
                                   const TrainState& state, int64_t step);
Checkpoint make_disc_checkpoint(const NoiseSchedule& sched, const PhasePartition& part,
                                const CondNet& net, int64_t step);

}  // namespace pcmlab
