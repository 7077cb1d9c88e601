#include "pcmlab/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pcmlab/distill.hpp"

namespace pcmlab {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* kind_name(CkptKind k) {
    switch (k) {
        case CkptKind::Teacher: return "teacher";
        case CkptKind::Student: return "student";
        case CkptKind::Discriminator: return "discriminator";
    }
    return "student";
}

CkptKind kind_from(const std::string& s) {
    if (s == "teacher") return CkptKind::Teacher;
    if (s == "student") return CkptKind::Student;
    if (s == "discriminator") return CkptKind::Discriminator;
    throw std::runtime_error("checkpoint: unknown kind '" + s + "'");
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    const NetConfig& nc = ck.net_cfg;
    if (ck.params.size() != static_cast<size_t>(nc.param_count()))
        throw std::invalid_argument("checkpoint: parameter count mismatch");
    std::ostringstream out;
    out << "{\n";
    out << "  \"version\": " << ck.version << ",\n";
    out << "  \"kind\": \"" << kind_name(ck.kind) << "\",\n";
    out << "  \"schedule\": {\"t_min\": " << fmt17(ck.sched.t_min)
        << ", \"t_max\": " << fmt17(ck.sched.t_max)
        << ", \"beta_min\": " << fmt17(ck.sched.beta_min)
        << ", \"beta_max\": " << fmt17(ck.sched.beta_max)
        << ", \"grid_points\": " << ck.grid_points << "},\n";
    out << "  \"partition\": [";
    for (size_t i = 0; i < ck.partition.size(); ++i)
        out << (i ? ", " : "") << ck.partition[i];
    out << "],\n";
    out << "  \"net\": {\n";
    out << "    \"widths\": [";
    auto widths = nc.widths();
    for (size_t i = 0; i < widths.size(); ++i) out << (i ? ", " : "") << widths[i];
    out << "],\n";
    out << "    \"layers\": [\n";
    CondNet shape(nc); // offsets only
    for (int l = 0; l < nc.layer_count(); ++l) {
        int rows = widths[static_cast<size_t>(l) + 1];
        int cols = widths[static_cast<size_t>(l)];
        const double* w = ck.params.data() + shape.weight_offset(l);
        const double* b = ck.params.data() + shape.bias_offset(l);
        out << "      {\"w\": [";
        for (int i = 0; i < rows; ++i) {
            out << (i ? ", [" : "[");
            for (int j = 0; j < cols; ++j)
                out << (j ? ", " : "") << fmt17(w[static_cast<size_t>(i) * cols + j]);
            out << "]";
        }
        out << "], \"b\": [";
        for (int i = 0; i < rows; ++i) out << (i ? ", " : "") << fmt17(b[i]);
        out << "]}" << (l + 1 < nc.layer_count() ? ",\n" : "\n");
    }
    out << "    ],\n";
    out << "    \"embeddings\": {\"class\": [";
    const double* emb = ck.params.data() + shape.embedding_offset();
    for (int r = 0; r <= nc.class_count; ++r) {
        out << (r ? ", [" : "[");
        for (int c = 0; c < nc.class_emb_dim; ++c)
            out << (c ? ", " : "") << fmt17(emb[static_cast<size_t>(r) * nc.class_emb_dim + c]);
        out << "]";
    }
    out << "]}\n";
    out << "  },\n";
    out << "  \"train\": {\"step\": " << ck.step << ", \"ema_mu\": " << fmt17(ck.ema_mu) << "}\n";
    out << "}\n";

    // write-then-rename so readers never observe a torn file
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("checkpoint: cannot write " + tmp);
        f << out.str();
        f.flush();
        if (!f.good()) throw std::runtime_error("checkpoint: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("checkpoint: cannot replace " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("checkpoint: invalid JSON in " + path + ": " + e.what());
    }
    Checkpoint ck;
    ck.version = j.at("version").get<int>();
    if (ck.version != 1)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(ck.version));
    ck.kind = kind_from(j.at("kind").get<std::string>());
    const auto& js = j.at("schedule");
    ck.sched.t_min = js.at("t_min").get<double>();
    ck.sched.t_max = js.at("t_max").get<double>();
    ck.sched.beta_min = js.at("beta_min").get<double>();
    ck.sched.beta_max = js.at("beta_max").get<double>();
    ck.grid_points = js.at("grid_points").get<int>();
    ck.sched.validate();
    ck.partition = j.at("partition").get<std::vector<int>>();

    const auto& jn = j.at("net");
    auto widths = jn.at("widths").get<std::vector<int>>();
    if (widths.size() < 2) throw std::runtime_error("checkpoint: bad widths");
    const auto& emb = jn.at("embeddings").at("class");
    if (!emb.is_array() || emb.empty()) throw std::runtime_error("checkpoint: bad embeddings");
    NetConfig nc;
    nc.data_dim = 2;
    nc.out_dim = widths.back();
    nc.hidden_layers = static_cast<int>(widths.size()) - 2;
    nc.hidden_width = nc.hidden_layers > 0 ? widths[1] : 0;
    nc.class_count = static_cast<int>(emb.size()) - 1;
    nc.class_emb_dim = static_cast<int>(emb.front().size());
    int tf2 = widths.front() - nc.data_dim - nc.class_emb_dim;
    if (tf2 < 2 || tf2 % 2 != 0) throw std::runtime_error("checkpoint: widths do not match features");
    nc.time_freqs = tf2 / 2;
    nc.validate();
    if (nc.widths() != widths) throw std::runtime_error("checkpoint: inconsistent widths");

    CondNet shape(nc);
    ck.net_cfg = nc;
    ck.params.assign(static_cast<size_t>(nc.param_count()), 0.0);
    const auto& layers = jn.at("layers");
    if (static_cast<int>(layers.size()) != nc.layer_count())
        throw std::runtime_error("checkpoint: wrong layer count");
    for (int l = 0; l < nc.layer_count(); ++l) {
        int rows = widths[static_cast<size_t>(l) + 1];
        int cols = widths[static_cast<size_t>(l)];
        const auto& jw = layers[static_cast<size_t>(l)].at("w");
        const auto& jb = layers[static_cast<size_t>(l)].at("b");
        if (static_cast<int>(jw.size()) != rows || static_cast<int>(jb.size()) != rows)
            throw std::runtime_error("checkpoint: layer shape mismatch");
        double* w = ck.params.data() + shape.weight_offset(l);
        double* b = ck.params.data() + shape.bias_offset(l);
        for (int i = 0; i < rows; ++i) {
            const auto& row = jw[static_cast<size_t>(i)];
            if (static_cast<int>(row.size()) != cols)
                throw std::runtime_error("checkpoint: layer shape mismatch");
            for (int c = 0; c < cols; ++c)
                w[static_cast<size_t>(i) * cols + c] = row[static_cast<size_t>(c)].get<double>();
            b[i] = jb[static_cast<size_t>(i)].get<double>();
        }
    }
    double* ep = ck.params.data() + shape.embedding_offset();
    for (int r = 0; r <= nc.class_count; ++r) {
        const auto& row = emb[static_cast<size_t>(r)];
        if (static_cast<int>(row.size()) != nc.class_emb_dim)
            throw std::runtime_error("checkpoint: embedding shape mismatch");
        for (int c = 0; c < nc.class_emb_dim; ++c)
            ep[static_cast<size_t>(r) * nc.class_emb_dim + c] = row[static_cast<size_t>(c)].get<double>();
    }

    const auto& jt = j.at("train");
    ck.step = jt.at("step").get<int64_t>();
    ck.ema_mu = jt.at("ema_mu").get<double>();

    // partition must address the stored grid
    partition_of(ck);
    return ck;
}

CondNet net_of(const Checkpoint& ck) {
    CondNet net(ck.net_cfg);
    net.params() = ck.params;
    return net;
}

PhasePartition partition_of(const Checkpoint& ck) {
    TimestepGrid grid = TimestepGrid::uniform(ck.sched, ck.grid_points);
    return PhasePartition::with_edges(std::move(grid), ck.partition);
}

Checkpoint make_teacher_checkpoint(const NoiseSchedule& sched, int grid_points,
                                   const CondNet& net, int64_t step) {
    Checkpoint ck;
    ck.kind = CkptKind::Teacher;
    ck.sched = sched;
    ck.grid_points = grid_points;
    ck.partition = {0, grid_points};
    ck.net_cfg = net.config();
    ck.params = net.params();
    ck.step = step;
    ck.ema_mu = 0.0;
    return ck;
}

Checkpoint make_student_checkpoint(const NoiseSchedule& sched, const PhasePartition& part,
                                   const TrainState& state, int64_t step) {
    Checkpoint ck;
    ck.kind = CkptKind::Student;
    ck.sched = sched;
    ck.grid_points = part.grid.intervals();
    ck.partition = part.edges;
    ck.net_cfg = state.ema.config();
    ck.params = state.ema.params();
    ck.step = step;
    ck.ema_mu = state.ema_mu;
    return ck;
}

Checkpoint make_disc_checkpoint(const NoiseSchedule& sched, const PhasePartition& part,
                                const CondNet& net, int64_t step) {
    Checkpoint ck;
    ck.kind = CkptKind::Discriminator;
    ck.sched = sched;
    ck.grid_points = part.grid.intervals();
    ck.partition = part.edges;
    ck.net_cfg = net.config();
    ck.params = net.params();
    ck.step = step;
    ck.ema_mu = 0.0;
    return ck;
}

}  // namespace pcmlab
