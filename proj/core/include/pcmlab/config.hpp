#pragma once

#include <stdexcept>
#include <string>

#include "pcmlab/distill.hpp"
#include "pcmlab/netkit.hpp"
#include "pcmlab/schedule.hpp"
#include "pcmlab/toydata.hpp"

namespace pcmlab {

// configuration mistakes (parse errors, unknown keys, invalid values);
// distinct from runtime failures so the driver can exit 2 instead of 1
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One run configuration covering the whole pipeline.  The file format is a
// flat key = value list under [schedule], [data], [teacher], [distill] and
// [sampler]; every key has a default and unknown keys are hard errors.
struct RunConfig {
    NoiseSchedule schedule;
    int grid_intervals = 50;

    // [data] ring: class-striped Gaussian modes on a circle; gauss: the
    // single isotropic source with a closed-form reverse flow
    std::string data_kind = "ring";
    int data_modes = 8;
    double data_radius = 2.0;
    double data_mode_std = 0.1;
    int data_classes = 2;
    Vec2 gauss_mean{1.0, 0.5};
    double gauss_std = 0.5;

    // [teacher] network architecture (shared by every net in the run) plus
    // the denoiser pretraining loop
    int hidden_width = 64;
    int hidden_layers = 3;
    int time_freqs = 8;
    int class_emb_dim = 8;
    TeacherTrainSettings teacher;

    DistillSettings distill;

    // [sampler]
    int sample_steps = 4;
    double sample_r = 1.0;
    double cfg_scale = 1.0; // inference-side guidance w'
    int neg_class = kNullClass;
    int sample_n = 4096;
    bool sample_clip = true;
    uint64_t sample_seed = 3;

    void validate() const; // throws ConfigError

    MixtureSpec make_mixture() const;
    GaussianOracle make_gauss() const;
    NetConfig make_net_config() const;
};

RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

// default config rendered as a parseable file; parse(default) == RunConfig{}
std::string default_config_text();

// shortest decimal form that parses back to exactly the same double
std::string format_double(double v);

}  // namespace pcmlab
