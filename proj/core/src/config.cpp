#include "pcmlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pcmlab {

std::string format_double(double v) {
    char buf[64];
    if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, const std::string& origin, int line) {
    char* end = nullptr;
    double r = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size())
        fail(origin, line, "expected a number, got '" + v + "'");
    return r;
}

long long to_int(const std::string& v, const std::string& origin, int line) {
    char* end = nullptr;
    long long r = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size())
        fail(origin, line, "expected an integer, got '" + v + "'");
    return r;
}

uint64_t to_u64(const std::string& v, const std::string& origin, int line) {
    if (!v.empty() && v.front() == '-') fail(origin, line, "expected a non-negative integer");
    char* end = nullptr;
    uint64_t r = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size())
        fail(origin, line, "expected a non-negative integer, got '" + v + "'");
    return r;
}

bool to_bool(const std::string& v, const std::string& origin, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(origin, line, "expected true or false, got '" + v + "'");
}

std::string to_str(const std::string& v, const std::string& origin, int line) {
    if (!v.empty() && v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') fail(origin, line, "unterminated string");
        return v.substr(1, v.size() - 2);
    }
    return v;
}

void apply(RunConfig& c, const std::string& sec, const std::string& key, const std::string& val,
           const std::string& origin, int line) {
    if (sec == "schedule") {
        if (key == "t_min") c.schedule.t_min = to_double(val, origin, line);
        else if (key == "t_max") c.schedule.t_max = to_double(val, origin, line);
        else if (key == "beta_min") c.schedule.beta_min = to_double(val, origin, line);
        else if (key == "beta_max") c.schedule.beta_max = to_double(val, origin, line);
        else if (key == "grid_intervals") c.grid_intervals = static_cast<int>(to_int(val, origin, line));
        else fail(origin, line, "unknown key '" + key + "' in [schedule]");
    } else if (sec == "data") {
        if (key == "kind") c.data_kind = to_str(val, origin, line);
        else if (key == "modes") c.data_modes = static_cast<int>(to_int(val, origin, line));
        else if (key == "radius") c.data_radius = to_double(val, origin, line);
        else if (key == "mode_std") c.data_mode_std = to_double(val, origin, line);
        else if (key == "classes") c.data_classes = static_cast<int>(to_int(val, origin, line));
        else if (key == "gauss_mean_x") c.gauss_mean.x = to_double(val, origin, line);
        else if (key == "gauss_mean_y") c.gauss_mean.y = to_double(val, origin, line);
        else if (key == "gauss_std") c.gauss_std = to_double(val, origin, line);
        else fail(origin, line, "unknown key '" + key + "' in [data]");
    } else if (sec == "teacher") {
        if (key == "hidden_width") c.hidden_width = static_cast<int>(to_int(val, origin, line));
        else if (key == "hidden_layers") c.hidden_layers = static_cast<int>(to_int(val, origin, line));
        else if (key == "time_freqs") c.time_freqs = static_cast<int>(to_int(val, origin, line));
        else if (key == "class_emb_dim") c.class_emb_dim = static_cast<int>(to_int(val, origin, line));
        else if (key == "iterations") c.teacher.iterations = static_cast<int>(to_int(val, origin, line));
        else if (key == "batch") c.teacher.batch = static_cast<int>(to_int(val, origin, line));
        else if (key == "lr") c.teacher.lr = to_double(val, origin, line);
        else if (key == "cond_dropout") c.teacher.cond_dropout = to_double(val, origin, line);
        else if (key == "seed") c.teacher.seed = to_u64(val, origin, line);
        else fail(origin, line, "unknown key '" + key + "' in [teacher]");
    } else if (sec == "distill") {
        if (key == "mode") {
            std::string m = to_str(val, origin, line);
            if (m == "pcd") c.distill.mode = DistillMode::Pcd;
            else if (m == "pcd-star") c.distill.mode = DistillMode::PcdStar;
            else fail(origin, line, "mode must be pcd or pcd-star");
        } else if (key == "phases") c.distill.phases = static_cast<int>(to_int(val, origin, line));
        else if (key == "solver_steps") c.distill.solver_steps = static_cast<int>(to_int(val, origin, line));
        else if (key == "w_min") c.distill.w_min = to_double(val, origin, line);
        else if (key == "w_max") c.distill.w_max = to_double(val, origin, line);
        else if (key == "drop_ratio") c.distill.drop_ratio = to_double(val, origin, line);
        else if (key == "metric") {
            std::string m = to_str(val, origin, line);
            if (m == "squared-l2") c.distill.metric = Metric::SquaredL2;
            else if (m == "pseudo-huber") c.distill.metric = Metric::PseudoHuber;
            else fail(origin, line, "metric must be squared-l2 or pseudo-huber");
        } else if (key == "huber_delta") c.distill.huber_delta = to_double(val, origin, line);
        else if (key == "weight") {
            std::string m = to_str(val, origin, line);
            if (m == "constant") c.distill.weight_mode = WeightMode::Constant;
            else if (m == "inverse-map-gain") c.distill.weight_mode = WeightMode::InverseMapGain;
            else fail(origin, line, "weight must be constant or inverse-map-gain");
        }
        else if (key == "lambda_weight") c.distill.lambda_weight = to_double(val, origin, line);
        else if (key == "lambda_adv") c.distill.lambda_adv = to_double(val, origin, line);
        else if (key == "batch") c.distill.batch = static_cast<int>(to_int(val, origin, line));
        else if (key == "iterations") c.distill.iterations = static_cast<int>(to_int(val, origin, line));
        else if (key == "lr") c.distill.lr = to_double(val, origin, line);
        else if (key == "ema_mu") c.distill.ema_mu = to_double(val, origin, line);
        else if (key == "clip_in_training") c.distill.clip_in_training = to_bool(val, origin, line);
        else if (key == "seed") c.distill.seed = to_u64(val, origin, line);
        else fail(origin, line, "unknown key '" + key + "' in [distill]");
    } else if (sec == "sampler") {
        if (key == "steps") c.sample_steps = static_cast<int>(to_int(val, origin, line));
        else if (key == "r") c.sample_r = to_double(val, origin, line);
        else if (key == "cfg_scale") c.cfg_scale = to_double(val, origin, line);
        else if (key == "neg_class") c.neg_class = static_cast<int>(to_int(val, origin, line));
        else if (key == "n") c.sample_n = static_cast<int>(to_int(val, origin, line));
        else if (key == "clip") c.sample_clip = to_bool(val, origin, line);
        else if (key == "seed") c.sample_seed = to_u64(val, origin, line);
        else fail(origin, line, "unknown key '" + key + "' in [sampler]");
    } else if (sec.empty()) {
        fail(origin, line, "key '" + key + "' appears before any [section]");
    } else {
        fail(origin, line, "unknown section [" + sec + "]");
    }
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string s = trim(line);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(origin, ln, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos) fail(origin, ln, "expected key = value");
        apply(cfg, section, trim(s.substr(0, eq)), trim(s.substr(eq + 1)), origin, ln);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

void RunConfig::validate() const {
    try {
        schedule.validate();
        teacher.validate();
        distill.validate();
        make_net_config().validate();
        if (data_kind == "ring") {
            make_mixture().validate();
        } else if (data_kind == "gauss") {
            if (!(gauss_std > 0.0)) throw ConfigError("data.gauss_std must be positive");
        } else {
            throw ConfigError("data.kind must be ring or gauss");
        }
        if (grid_intervals < 1) throw ConfigError("schedule.grid_intervals must be positive");
        // catch an infeasible phase split before any training starts
        PhasePartition part =
            PhasePartition::uniform(TimestepGrid::uniform(schedule, grid_intervals), distill.phases);
        for (int m = 0; m < part.phases(); ++m) {
            int span = part.edges[static_cast<size_t>(m) + 1] - part.edges[static_cast<size_t>(m)];
            if (span < distill.solver_steps)
                throw ConfigError("distill.solver_steps exceeds the shortest phase");
        }
        if (sample_steps < 1) throw ConfigError("sampler.steps must be positive");
        if (!(sample_r >= 0.0 && sample_r <= 1.0)) throw ConfigError("sampler.r must be in [0, 1]");
        if (!(cfg_scale > 0.0)) throw ConfigError("sampler.cfg_scale must be positive");
        if (sample_n < 1) throw ConfigError("sampler.n must be positive");
        if (neg_class < kNullClass || neg_class >= make_net_config().class_count)
            throw ConfigError("sampler.neg_class is not a valid class id");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

MixtureSpec RunConfig::make_mixture() const {
    return MixtureSpec::ring(data_modes, data_radius, data_mode_std, data_classes);
}

GaussianOracle RunConfig::make_gauss() const {
    GaussianOracle g;
    g.mean = gauss_mean;
    g.stddev = gauss_std;
    return g;
}

NetConfig RunConfig::make_net_config() const {
    NetConfig n;
    n.hidden_width = hidden_width;
    n.hidden_layers = hidden_layers;
    n.time_freqs = time_freqs;
    n.class_emb_dim = class_emb_dim;
    n.class_count = data_kind == "gauss" ? 1 : data_classes;
    return n;
}

std::string default_config_text() {
    const RunConfig c;
    std::ostringstream out;
    out << "# pcmlab run configuration\n";
    out << "\n[schedule]\n";
    out << "t_min = " << format_double(c.schedule.t_min) << "\n";
    out << "t_max = " << format_double(c.schedule.t_max) << "\n";
    out << "beta_min = " << format_double(c.schedule.beta_min) << "\n";
    out << "beta_max = " << format_double(c.schedule.beta_max) << "\n";
    out << "grid_intervals = " << c.grid_intervals << "\n";
    out << "\n[data]\n";
    out << "kind = " << c.data_kind << "  # ring | gauss\n";
    out << "modes = " << c.data_modes << "\n";
    out << "radius = " << format_double(c.data_radius) << "\n";
    out << "mode_std = " << format_double(c.data_mode_std) << "\n";
    out << "classes = " << c.data_classes << "\n";
    out << "gauss_mean_x = " << format_double(c.gauss_mean.x) << "\n";
    out << "gauss_mean_y = " << format_double(c.gauss_mean.y) << "\n";
    out << "gauss_std = " << format_double(c.gauss_std) << "\n";
    out << "\n[teacher]\n";
    out << "hidden_width = " << c.hidden_width << "\n";
    out << "hidden_layers = " << c.hidden_layers << "\n";
    out << "time_freqs = " << c.time_freqs << "\n";
    out << "class_emb_dim = " << c.class_emb_dim << "\n";
    out << "iterations = " << c.teacher.iterations << "\n";
    out << "batch = " << c.teacher.batch << "\n";
    out << "lr = " << format_double(c.teacher.lr) << "\n";
    out << "cond_dropout = " << format_double(c.teacher.cond_dropout) << "\n";
    out << "seed = " << c.teacher.seed << "\n";
    out << "\n[distill]\n";
    out << "mode = " << (c.distill.mode == DistillMode::Pcd ? "pcd" : "pcd-star") << "\n";
    out << "phases = " << c.distill.phases << "\n";
    out << "solver_steps = " << c.distill.solver_steps << "\n";
    out << "w_min = " << format_double(c.distill.w_min) << "\n";
    out << "w_max = " << format_double(c.distill.w_max) << "\n";
    out << "drop_ratio = " << format_double(c.distill.drop_ratio) << "\n";
    out << "metric = " << (c.distill.metric == Metric::SquaredL2 ? "squared-l2" : "pseudo-huber")
        << "\n";
    out << "huber_delta = " << format_double(c.distill.huber_delta) << "\n";
    out << "weight = "
        << (c.distill.weight_mode == WeightMode::Constant ? "constant" : "inverse-map-gain")
        << "  # constant | inverse-map-gain (per-tuple 1/eps_coeff^2)\n";
    out << "lambda_weight = " << format_double(c.distill.lambda_weight) << "\n";
    out << "lambda_adv = " << format_double(c.distill.lambda_adv) << "\n";
    out << "batch = " << c.distill.batch << "\n";
    out << "iterations = " << c.distill.iterations << "\n";
    out << "lr = " << format_double(c.distill.lr) << "\n";
    out << "ema_mu = " << format_double(c.distill.ema_mu) << "\n";
    out << "clip_in_training = " << (c.distill.clip_in_training ? "true" : "false") << "\n";
    out << "seed = " << c.distill.seed << "\n";
    out << "\n[sampler]\n";
    out << "steps = " << c.sample_steps << "\n";
    out << "r = " << format_double(c.sample_r) << "\n";
    out << "cfg_scale = " << format_double(c.cfg_scale) << "\n";
    out << "neg_class = " << c.neg_class << "  # -1 is the null condition\n";
    out << "n = " << c.sample_n << "\n";
    out << "clip = " << (c.sample_clip ? "true" : "false") << "\n";
    out << "seed = " << c.sample_seed << "\n";
    return out.str();
}

}  // namespace pcmlab
