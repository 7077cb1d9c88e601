#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcmlab/checkpoint.hpp"
#include "pcmlab/config.hpp"
#include "pcmlab/evalkit.hpp"
#include "pcmlab/report.hpp"

using namespace pcmlab;

namespace {

uint64_t env_or(uint64_t fallback) {
    const char* env = std::getenv("PCMLAB_SEED");
    if (env == nullptr || *env == '\0') return fallback;
    char* end = nullptr;
    uint64_t v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ConfigError("PCMLAB_SEED must be a non-negative integer");
    return v;
}

// documented precedence: flag > PCMLAB_SEED > config/default
uint64_t resolve_seed(const CLI::Option* opt, uint64_t flag_val, uint64_t fallback) {
    if (opt != nullptr && opt->count() > 0) return flag_val;
    return env_or(fallback);
}

int parse_class_arg(const std::string& s, int class_count, bool allow_mixed) {
    if (allow_mixed && s == "mixed") return kMixedClass;
    if (s == "null") return kNullClass;
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0')
        throw ConfigError("class must be an integer, 'null'" +
                          std::string(allow_mixed ? " or 'mixed'" : ""));
    if (v < kNullClass || v >= class_count)
        throw ConfigError("class " + s + " out of range for " + std::to_string(class_count) +
                          " classes");
    return static_cast<int>(v);
}

// owns whichever data source the config names; ref() views into this object
struct DataBundle {
    std::optional<MixtureSpec> mix;
    std::optional<GaussianOracle> gauss;

    static DataBundle from(const RunConfig& cfg) {
        DataBundle b;
        if (cfg.data_kind == "gauss") b.gauss = cfg.make_gauss();
        else b.mix = cfg.make_mixture();
        return b;
    }

    DataRef ref() const {
        DataRef r;
        if (mix) r.mix = &*mix;
        if (gauss) r.gauss = &*gauss;
        return r;
    }
};

// a teacher named on the command line: either a checkpoint path or "oracle"
struct TeacherBundle {
    std::optional<CondNet> net;
    std::optional<GaussianOracle> gauss;

    static TeacherBundle from(const std::string& arg, const RunConfig& cfg) {
        TeacherBundle b;
        if (arg == "oracle") {
            if (cfg.data_kind != "gauss")
                throw ConfigError("--teacher oracle requires data.kind = gauss");
            b.gauss = cfg.make_gauss();
            return b;
        }
        Checkpoint ck = load_checkpoint(arg);
        if (ck.kind != CkptKind::Teacher)
            throw ConfigError(arg + " is not a teacher checkpoint");
        if (ck.sched.t_min != cfg.schedule.t_min || ck.sched.t_max != cfg.schedule.t_max ||
            ck.sched.beta_min != cfg.schedule.beta_min || ck.sched.beta_max != cfg.schedule.beta_max)
            throw ConfigError(arg + ": teacher schedule differs from the config schedule");
        b.net = net_of(ck);
        return b;
    }

    TeacherRef ref() const {
        TeacherRef r;
        if (net) r.net = &*net;
        if (gauss) r.oracle = &*gauss;
        return r;
    }
};

void print_loss_tail(const std::vector<LossRow>& log) {
    if (log.empty()) return;
    const LossRow& r = log.back();
    std::cout << "final step " << r.step << ": l_pcm = " << format_double(r.l_pcm);
    if (r.l_adv_disc != 0.0 || r.l_adv_gen != 0.0)
        std::cout << ", l_adv_gen = " << format_double(r.l_adv_gen)
                  << ", l_adv_disc = " << format_double(r.l_adv_disc);
    std::cout << "\n";
}

int cmd_gen_config(const std::string& path, bool force) {
    if (!force && std::filesystem::exists(path))
        throw ConfigError(path + " exists; pass --force to overwrite");
    try {
        write_text_file(path, default_config_text());
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_train_teacher(const std::string& config_path, const std::string& out,
                      const std::string& loss_csv, const CLI::Option* seed_opt,
                      uint64_t seed_flag) {
    RunConfig cfg = load_config(config_path);
    cfg.teacher.seed = resolve_seed(seed_opt, seed_flag, cfg.teacher.seed);
    DataBundle data = DataBundle::from(cfg);
    std::vector<LossRow> log;
    CondNet net = train_teacher(cfg.schedule, data.ref(), cfg.make_net_config(), cfg.teacher, &log);
    save_checkpoint(
        make_teacher_checkpoint(cfg.schedule, cfg.grid_intervals, net, cfg.teacher.iterations),
        out);
    if (!loss_csv.empty()) write_loss_csv(loss_csv, log);
    print_loss_tail(log);
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_distill(const std::string& config_path, const std::string& teacher_arg,
                const std::string& mode, int phases, bool no_adv, const std::string& out,
                const std::string& disc_out, const std::string& loss_csv,
                const CLI::Option* seed_opt, uint64_t seed_flag) {
    RunConfig cfg = load_config(config_path);
    if (mode == "pcd") cfg.distill.mode = DistillMode::Pcd;
    else if (mode == "pcd-star") cfg.distill.mode = DistillMode::PcdStar;
    else if (!mode.empty()) throw ConfigError("--mode must be pcd or pcd-star");
    if (phases > 0) cfg.distill.phases = phases;
    if (no_adv) cfg.distill.lambda_adv = 0.0;
    cfg.distill.seed = resolve_seed(seed_opt, seed_flag, cfg.distill.seed);
    cfg.validate();
    DataBundle data = DataBundle::from(cfg);
    TeacherBundle teacher = TeacherBundle::from(teacher_arg, cfg);
    PhasePartition part = PhasePartition::uniform(
        TimestepGrid::uniform(cfg.schedule, cfg.grid_intervals), cfg.distill.phases);
    DistillResult result = distill(cfg.schedule, part, data.ref(), teacher.ref(),
                                   cfg.make_net_config(), cfg.distill, out + ".crash");
    save_checkpoint(
        make_student_checkpoint(cfg.schedule, part, result.student, cfg.distill.iterations), out);
    if (!disc_out.empty() && cfg.distill.lambda_adv > 0.0)
        save_checkpoint(
            make_disc_checkpoint(cfg.schedule, part, result.disc.net, cfg.distill.iterations),
            disc_out);
    if (!loss_csv.empty()) write_loss_csv(loss_csv, result.log);
    print_loss_tail(result.log);
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_sample(const std::string& ckpt, int steps, double r, double cfg_scale,
               const std::string& neg_class, const std::string& cls_arg, int n, bool no_clip,
               const CLI::Option* seed_opt, uint64_t seed_flag, const std::string& out,
               const std::string& svg) {
    Checkpoint ck = load_checkpoint(ckpt);
    CondNet net = net_of(ck);
    PhasePartition part = partition_of(ck);
    if (steps < part.phases())
        throw ConfigError("--steps " + std::to_string(steps) + " is below the checkpoint's " +
                          std::to_string(part.phases()) +
                          " phases; the model only defines maps onto phase edges");
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("--r must lie in [0, 1]");
    const int classes = ck.net_cfg.class_count;
    const int cls = parse_class_arg(cls_arg, classes, true);
    const int neg = parse_class_arg(neg_class, classes, false);
    const uint64_t seed = resolve_seed(seed_opt, seed_flag, 3);
    const EpsilonPolicy policy = guided_policy(net, cfg_scale, neg);
    // the x0 divisor clamp mirrors the clamped consistency parameterization;
    // epsilon teachers are plain DDIM models and never use it
    const bool clip = !no_clip && ck.kind == CkptKind::Student;
    SampleRun run;
    if (r == 1.0 && steps == part.phases()) {
        run = sample_deterministic(ck.sched, part, policy, n, cls, seed, clip, classes);
    } else {
        SampleSettings s;
        s.steps = steps;
        s.r = r;
        s.clip = clip;
        s.seed = seed;
        run = sample_stochastic(ck.sched, part, policy, s, n, cls, classes);
    }
    write_samples_csv(out, run, seed);
    if (!svg.empty()) write_scatter_svg(svg, run);
    std::cout << "wrote " << out << " (n = " << n << ", steps = " << steps
              << ", r = " << format_double(r) << ", seed = " << seed << ")\n";
    return 0;
}

int cmd_eval_sw(const std::string& ckpt, const std::string& config_path, int steps, double r,
                int n, int projections, const CLI::Option* seed_opt, uint64_t seed_flag) {
    RunConfig cfg = load_config(config_path);
    Checkpoint ck = load_checkpoint(ckpt);
    CondNet net = net_of(ck);
    PhasePartition part = partition_of(ck);
    const uint64_t seed = resolve_seed(seed_opt, seed_flag, cfg.sample_seed);
    if (steps <= 0) steps = part.phases();
    SampleSettings s;
    s.steps = steps;
    s.r = r;
    // students trained with the clamped map sample with it; teachers never do
    s.clip = ck.kind == CkptKind::Student && cfg.distill.clip_in_training;
    s.seed = seed;
    const SampleRun run = sample_stochastic(ck.sched, part, plain_policy(net), s, n, kMixedClass,
                                            ck.net_cfg.class_count);
    DataBundle data = DataBundle::from(cfg);
    std::vector<Vec2> reference(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        StreamRng rng(seed + 1, stream::kData, static_cast<uint64_t>(i));
        const int cls = static_cast<int>(
            rng.next_below(static_cast<uint64_t>(data.ref().class_count())));
        reference[static_cast<size_t>(i)] = data.ref().sample(cls, rng);
    }
    const double sw = sliced_wasserstein(run.points, reference, projections, seed + 2);
    std::cout << "sliced_wasserstein = " << format_double(sw) << " (n = " << n
              << ", steps = " << steps << ", projections = " << projections << ", seed = " << seed
              << ")\n";
    return 0;
}

int cmd_eval_consistency(const std::string& ckpt, const std::string& teacher_arg,
                         const std::string& config_path, int pairs, int substeps, double w,
                         bool cross, int cross_n, const CLI::Option* seed_opt,
                         uint64_t seed_flag) {
    RunConfig cfg = load_config(config_path);
    Checkpoint ck = load_checkpoint(ckpt);
    CondNet net = net_of(ck);
    PhasePartition part = partition_of(ck);
    DataBundle data = DataBundle::from(cfg);
    TeacherBundle teacher = TeacherBundle::from(teacher_arg, cfg);
    ResidualSettings rs;
    rs.n_pairs = pairs;
    rs.substeps = substeps;
    rs.w = w;
    rs.clip = cfg.distill.clip_in_training; // evaluate the map the model was trained as
    rs.seed = resolve_seed(seed_opt, seed_flag, rs.seed);
    const double residual =
        self_consistency_residual(ck.sched, part, net, teacher.ref(), data.ref(), rs);
    std::cout << "self_consistency_residual = " << format_double(residual)
              << " (relative to data std; pairs = " << pairs << ", seed = " << rs.seed << ")\n";
    if (cross) {
        const int m = part.phases();
        const EpsilonPolicy policy = plain_policy(net);
        const double d1 = cross_step_consistency(ck.sched, part, policy, kMixedClass,
                                                 ck.net_cfg.class_count, m, 2 * m, 1.0, cross_n,
                                                 rs.seed);
        const double d0 = cross_step_consistency(ck.sched, part, policy, kMixedClass,
                                                 ck.net_cfg.class_count, m, 2 * m, 0.0, cross_n,
                                                 rs.seed);
        std::cout << "cross_step (" << m << " vs " << 2 * m
                  << " steps): r=1 -> " << format_double(d1) << ", r=0 -> " << format_double(d0)
                  << " (n = " << cross_n << ")\n";
    }
    return 0;
}

int cmd_eval_order(const std::string& config_path, const std::vector<int>& intervals, int n,
                   const CLI::Option* seed_opt, uint64_t seed_flag) {
    RunConfig cfg = load_config(config_path);
    const GaussianOracle oracle = cfg.make_gauss();
    const uint64_t seed = resolve_seed(seed_opt, seed_flag, 9);
    const OrderStudy study = order_study(cfg.schedule, oracle, intervals, n, seed);
    for (size_t i = 0; i < study.intervals.size(); ++i)
        std::cout << "N = " << study.intervals[i]
                  << ": endpoint error = " << format_double(study.errors[i]) << "\n";
    std::cout << "slope = " << format_double(study.slope) << " (n = " << n << ", seed = " << seed
              << ")\n";
    return 0;
}

int cmd_eval_neg(const std::string& config_path, const std::string& ckpt_pcd,
                 const std::string& ckpt_star, double w_prime, int n, const std::string& cls_arg,
                 const std::string& neg_arg, const CLI::Option* seed_opt, uint64_t seed_flag) {
    RunConfig cfg = load_config(config_path);
    if (cfg.data_kind != "ring")
        throw ConfigError("eval neg-sensitivity needs mixture data (data.kind = ring)");
    const MixtureSpec mix = cfg.make_mixture();
    Checkpoint ck_a = load_checkpoint(ckpt_pcd);
    Checkpoint ck_b = load_checkpoint(ckpt_star);
    CondNet net_a = net_of(ck_a);
    CondNet net_b = net_of(ck_b);
    const int classes = mix.class_count;
    const int cls = parse_class_arg(cls_arg, classes, false);
    const int neg = parse_class_arg(neg_arg, classes, false);
    const uint64_t seed = resolve_seed(seed_opt, seed_flag, 13);
    const double frac_a = negative_mode_fraction(ck_a.sched, partition_of(ck_a), net_a, mix, cls,
                                                 neg, w_prime, n, seed,
                                                 cfg.distill.clip_in_training);
    const double frac_b = negative_mode_fraction(ck_b.sched, partition_of(ck_b), net_b, mix, cls,
                                                 neg, w_prime, n, seed,
                                                 cfg.distill.clip_in_training);
    std::cout << "negative-mode fraction @ w' = " << format_double(w_prime) << ": pcd = "
              << format_double(frac_a) << ", pcd-star = " << format_double(frac_b)
              << " (n = " << n << ", seed = " << seed << ")\n";
    std::cout << (frac_b < frac_a ? "pcd-star is less sensitive to the negative condition\n"
                                  : "warning: pcd-star fraction is not lower\n");
    return 0;
}

int cmd_verify(const std::string& config_path, const std::string& student_path,
               const std::string& teacher_arg, const CLI::Option* seed_opt, uint64_t seed_flag) {
    const uint64_t seed = resolve_seed(seed_opt, seed_flag, 5);
    const IdentityReport report = verify_identities(seed);
    bool ok = true;
    for (const IdentityCheck& c : report.checks) {
        std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  max_dev = "
                  << format_double(c.max_dev) << " (tol " << format_double(c.tol)
                  << ", n = " << c.n << ")\n";
        ok = ok && c.pass;
    }
    if (!config_path.empty() && !student_path.empty() && !teacher_arg.empty()) {
        RunConfig cfg = load_config(config_path);
        Checkpoint ck = load_checkpoint(student_path);
        CondNet student = net_of(ck);
        PhasePartition part = partition_of(ck);
        DataBundle data = DataBundle::from(cfg);
        TeacherBundle teacher = TeacherBundle::from(teacher_arg, cfg);
        // the same data source translated far away stands in for a mismatched
        // pretraining distribution
        DataBundle shifted = data;
        const Vec2 offset{2.0, 2.0};
        if (shifted.mix)
            for (auto& cls_comps : shifted.mix->components)
                for (auto& comp : cls_comps) comp.mean += offset;
        if (shifted.gauss) shifted.gauss->mean += offset;
        PairingSettings ps;
        ps.seed = seed + 17;
        ps.kind = PairingKind::SelfConsistent;
        const PairingStudy self_pair = pairing_discriminator_loss(
            ck.sched, part, student, teacher.ref(), data.ref(), data.ref(), cfg.distill, ps);
        ps.kind = PairingKind::ShiftedData;
        const PairingStudy gan_pair = pairing_discriminator_loss(
            ck.sched, part, student, teacher.ref(), data.ref(), shifted.ref(), cfg.distill, ps);
        const bool self_ok = std::fabs(self_pair.heldout_hinge - 2.0) <= 0.1;
        const bool gan_ok = gan_pair.heldout_hinge <= 1.5;
        std::cout << (self_ok ? "PASS" : "FAIL")
                  << "  pairing-inseparable-at-convergence  heldout_hinge = "
                  << format_double(self_pair.heldout_hinge) << " (want 2 +- 0.1, n = "
                  << self_pair.n_eval << ")\n";
        std::cout << (gan_ok ? "PASS" : "FAIL")
                  << "  pairing-separable-under-data-shift  heldout_hinge = "
                  << format_double(gan_pair.heldout_hinge) << " (want <= 1.5, n = "
                  << gan_pair.n_eval << ")\n";
        ok = ok && self_ok && gan_ok;
    } else {
        std::cout << "note: pairing studies skipped (pass --config, --student and --teacher to "
                     "run them)\n";
    }
    std::cout << (ok ? "all checks passed\n" : "some checks FAILED\n");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phased consistency distillation on 2-D toy data"};
    app.require_subcommand(1);

    // gen-config
    auto* gen = app.add_subcommand("gen-config", "write the default run configuration");
    std::string gen_path;
    bool gen_force = false;
    gen->add_option("path", gen_path, "output file")->required();
    gen->add_flag("--force", gen_force, "overwrite an existing file");

    // train-teacher
    auto* tt = app.add_subcommand("train-teacher", "pretrain the noise-prediction teacher");
    std::string tt_config, tt_out = "teacher.json", tt_loss;
    uint64_t tt_seed = 0;
    tt->add_option("--config", tt_config, "run configuration")->required();
    tt->add_option("--out", tt_out, "teacher checkpoint path");
    tt->add_option("--loss-csv", tt_loss, "write the training log");
    auto* tt_seed_opt = tt->add_option("--seed", tt_seed, "override the teacher seed");

    // distill
    auto* ds = app.add_subcommand("distill", "distill a phased consistency student");
    std::string ds_config, ds_teacher, ds_mode, ds_out = "student.json", ds_disc, ds_loss;
    int ds_phases = 0;
    bool ds_no_adv = false;
    uint64_t ds_seed = 0;
    ds->add_option("--config", ds_config, "run configuration")->required();
    ds->add_option("--teacher", ds_teacher, "teacher checkpoint path, or 'oracle'")->required();
    ds->add_option("--mode", ds_mode, "pcd | pcd-star");
    ds->add_option("--phases", ds_phases, "override the phase count");
    ds->add_flag("--no-adv", ds_no_adv, "disable the adversarial loss");
    ds->add_option("--out", ds_out, "student checkpoint path");
    ds->add_option("--disc-out", ds_disc, "also save the discriminator");
    ds->add_option("--loss-csv", ds_loss, "write the training log");
    auto* ds_seed_opt = ds->add_option("--seed", ds_seed, "override the distill seed");

    // sample
    auto* sp = app.add_subcommand("sample", "draw samples from a checkpoint");
    std::string sp_ckpt, sp_neg = "null", sp_cls = "mixed", sp_out, sp_svg;
    int sp_steps = 4, sp_n = 4096;
    double sp_r = 1.0, sp_cfg = 1.0;
    bool sp_no_clip = false;
    uint64_t sp_seed = 3;
    sp->add_option("--ckpt", sp_ckpt, "student (or teacher) checkpoint")->required();
    sp->add_option("--steps", sp_steps, "evaluation steps (>= phase count)");
    sp->add_option("--r", sp_r, "stochasticity in [0, 1]; 1 is deterministic");
    sp->add_option("--cfg", sp_cfg, "guidance scale w'");
    sp->add_option("--neg-class", sp_neg, "guidance negative class ('null' or id)");
    sp->add_option("--class", sp_cls, "class to sample ('mixed', 'null' or id)");
    sp->add_option("--n", sp_n, "sample count");
    sp->add_flag("--no-clip", sp_no_clip, "disable the final-step divisor clamp");
    auto* sp_seed_opt = sp->add_option("--seed", sp_seed, "sampler seed");
    sp->add_option("--out", sp_out, "samples CSV path")->required();
    sp->add_option("--svg", sp_svg, "also write a scatter plot");

    // eval
    auto* ev = app.add_subcommand("eval", "metrics over checkpoints");
    ev->require_subcommand(1);

    auto* sw = ev->add_subcommand("sw", "sliced distance between samples and data");
    std::string sw_ckpt, sw_config;
    int sw_steps = 0, sw_n = 4096, sw_proj = 512;
    double sw_r = 1.0;
    uint64_t sw_seed = 0;
    sw->add_option("--ckpt", sw_ckpt, "checkpoint to sample")->required();
    sw->add_option("--config", sw_config, "run configuration (data source)")->required();
    sw->add_option("--steps", sw_steps, "sampler steps (default: phase count)");
    sw->add_option("--r", sw_r, "sampler stochasticity");
    sw->add_option("--n", sw_n, "points per side");
    sw->add_option("--projections", sw_proj, "projection count");
    auto* sw_seed_opt = sw->add_option("--seed", sw_seed, "evaluation seed");

    auto* cs = ev->add_subcommand("consistency", "same-phase self-consistency residual");
    std::string cs_ckpt, cs_teacher, cs_config;
    int cs_pairs = 1024, cs_substeps = 32, cs_cross_n = 2048;
    double cs_w = 1.0;
    bool cs_cross = false;
    uint64_t cs_seed = 0;
    cs->add_option("--ckpt", cs_ckpt, "student checkpoint")->required();
    cs->add_option("--teacher", cs_teacher, "teacher checkpoint or 'oracle'")->required();
    cs->add_option("--config", cs_config, "run configuration (data source)")->required();
    cs->add_option("--pairs", cs_pairs, "sampled (t, t') pairs");
    cs->add_option("--substeps", cs_substeps, "transport resolution for net teachers");
    cs->add_option("--w", cs_w, "guidance during transport");
    cs->add_flag("--cross", cs_cross, "also report cross-step distances");
    cs->add_option("--cross-n", cs_cross_n, "points for the cross-step report");
    auto* cs_seed_opt = cs->add_option("--seed", cs_seed, "evaluation seed");

    auto* od = ev->add_subcommand("order-study", "solver convergence order");
    std::string od_config;
    std::vector<int> od_intervals{10, 20, 40, 80, 160};
    int od_n = 256;
    uint64_t od_seed = 0;
    od->add_option("--config", od_config, "run configuration (gauss parameters)")->required();
    od->add_option("--intervals", od_intervals, "grid sizes to sweep");
    od->add_option("--n", od_n, "trajectories per grid size");
    auto* od_seed_opt = od->add_option("--seed", od_seed, "evaluation seed");

    auto* ng = ev->add_subcommand("neg-sensitivity", "negative-condition sensitivity of two students");
    std::string ng_config, ng_pcd, ng_star, ng_cls = "0", ng_neg = "1";
    double ng_w = 2.0;
    int ng_n = 4096;
    uint64_t ng_seed = 0;
    ng->add_option("--config", ng_config, "run configuration (mixture data)")->required();
    ng->add_option("--student-pcd", ng_pcd, "guidance-distilled student")->required();
    ng->add_option("--student-pcd-star", ng_star, "condition-drop student")->required();
    ng->add_option("--w-prime", ng_w, "inference guidance scale");
    ng->add_option("--n", ng_n, "samples per student");
    ng->add_option("--class", ng_cls, "positive class");
    ng->add_option("--neg-class", ng_neg, "negative class");
    auto* ng_seed_opt = ng->add_option("--seed", ng_seed, "evaluation seed");

    // verify
    auto* vf = app.add_subcommand("verify", "closed-form identity checks and pairing studies");
    std::string vf_config, vf_student, vf_teacher;
    uint64_t vf_seed = 5;
    vf->add_option("--config", vf_config, "run configuration (enables pairing studies)");
    vf->add_option("--student", vf_student, "converged student checkpoint");
    vf->add_option("--teacher", vf_teacher, "teacher checkpoint or 'oracle'");
    auto* vf_seed_opt = vf->add_option("--seed", vf_seed, "check seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_config(gen_path, gen_force);
        if (tt->parsed()) return cmd_train_teacher(tt_config, tt_out, tt_loss, tt_seed_opt, tt_seed);
        if (ds->parsed())
            return cmd_distill(ds_config, ds_teacher, ds_mode, ds_phases, ds_no_adv, ds_out,
                               ds_disc, ds_loss, ds_seed_opt, ds_seed);
        if (sp->parsed())
            return cmd_sample(sp_ckpt, sp_steps, sp_r, sp_cfg, sp_neg, sp_cls, sp_n, sp_no_clip,
                              sp_seed_opt, sp_seed, sp_out, sp_svg);
        if (ev->parsed()) {
            if (sw->parsed())
                return cmd_eval_sw(sw_ckpt, sw_config, sw_steps, sw_r, sw_n, sw_proj, sw_seed_opt,
                                   sw_seed);
            if (cs->parsed())
                return cmd_eval_consistency(cs_ckpt, cs_teacher, cs_config, cs_pairs, cs_substeps,
                                            cs_w, cs_cross, cs_cross_n, cs_seed_opt, cs_seed);
            if (od->parsed())
                return cmd_eval_order(od_config, od_intervals, od_n, od_seed_opt, od_seed);
            if (ng->parsed())
                return cmd_eval_neg(ng_config, ng_pcd, ng_star, ng_w, ng_n, ng_cls, ng_neg,
                                    ng_seed_opt, ng_seed);
        }
        if (vf->parsed()) return cmd_verify(vf_config, vf_student, vf_teacher, vf_seed_opt, vf_seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
