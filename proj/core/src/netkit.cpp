#include "pcmlab/netkit.hpp"

#include <cmath>
#include <stdexcept>

#include "pcmlab/rng.hpp"

namespace pcmlab {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double silu(double z) { return z * sigmoid(z); }
// d/dz silu = s(z) (1 + z (1 - s(z)))
inline double silu_grad(double z) {
    double s = sigmoid(z);
    return s * (1.0 + z * (1.0 - s));
}

}  // namespace

void NetConfig::validate() const {
    if (data_dim < 1 || out_dim < 1) throw std::invalid_argument("net: bad dimensions");
    if (hidden_layers < 0 || (hidden_layers > 0 && hidden_width < 1))
        throw std::invalid_argument("net: bad hidden shape");
    if (time_freqs < 1 || time_freq_max < 1.0) throw std::invalid_argument("net: bad time features");
    if (class_count < 1 || class_emb_dim < 0) throw std::invalid_argument("net: bad class embedding");
}

std::vector<int> NetConfig::widths() const {
    std::vector<int> w;
    w.push_back(feature_dim());
    for (int l = 0; l < hidden_layers; ++l) w.push_back(hidden_width);
    w.push_back(out_dim);
    return w;
}

int NetConfig::param_count() const {
    auto w = widths();
    int n = 0;
    for (size_t l = 0; l + 1 < w.size(); ++l) n += w[l + 1] * w[l] + w[l + 1];
    n += (class_count + 1) * class_emb_dim;
    return n;
}

CondNet::CondNet(NetConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    widths_ = cfg_.widths();
    int off = 0;
    for (int l = 0; l < cfg_.layer_count(); ++l) {
        w_off_.push_back(off);
        off += widths_[static_cast<size_t>(l) + 1] * widths_[static_cast<size_t>(l)];
        b_off_.push_back(off);
        off += widths_[static_cast<size_t>(l) + 1];
    }
    emb_off_ = off;
    off += (cfg_.class_count + 1) * cfg_.class_emb_dim;
    params_.assign(static_cast<size_t>(off), 0.0);
}

void CondNet::init_params(uint64_t seed) {
    for (int l = 0; l < cfg_.layer_count(); ++l) {
        StreamRng rng(seed, stream::kInit, static_cast<uint64_t>(l));
        int fan_in = widths_[static_cast<size_t>(l)];
        double bound = std::sqrt(6.0 / double(fan_in));
        int nw = widths_[static_cast<size_t>(l) + 1] * fan_in;
        // output layer starts at zero so the initial prediction is exactly 0
        if (l == cfg_.layer_count() - 1) bound = 0.0;
        for (int i = 0; i < nw; ++i)
            params_[static_cast<size_t>(w_off_[static_cast<size_t>(l)] + i)] = rng.next_uniform(-bound, bound);
        // biases stay zero
    }
    StreamRng rng(seed, stream::kInit, static_cast<uint64_t>(cfg_.layer_count()));
    int ne = (cfg_.class_count + 1) * cfg_.class_emb_dim;
    for (int i = 0; i < ne; ++i)
        params_[static_cast<size_t>(emb_off_ + i)] = rng.next_uniform(-0.5, 0.5);
}

void CondNet::build_features(const double* x, double t, int cls, std::vector<double>& f, int* row) const {
    f.resize(static_cast<size_t>(cfg_.feature_dim()));
    for (int i = 0; i < cfg_.data_dim; ++i) f[static_cast<size_t>(i)] = x[i];
    int base = cfg_.data_dim;
    for (int k = 0; k < cfg_.time_freqs; ++k) {
        double w = (cfg_.time_freqs == 1)
                       ? 1.0
                       : std::pow(cfg_.time_freq_max, double(k) / double(cfg_.time_freqs - 1));
        f[static_cast<size_t>(base + 2 * k)] = std::sin(w * t);
        f[static_cast<size_t>(base + 2 * k + 1)] = std::cos(w * t);
    }
    if (cls != kNullClass && (cls < 0 || cls >= cfg_.class_count))
        throw std::invalid_argument("net: class id out of range");
    int r = (cls == kNullClass) ? cfg_.class_count : cls;
    *row = r;
    const double* emb = params_.data() + emb_off_ + r * cfg_.class_emb_dim;
    base += 2 * cfg_.time_freqs;
    for (int i = 0; i < cfg_.class_emb_dim; ++i) f[static_cast<size_t>(base + i)] = emb[i];
}

void CondNet::forward(const double* x, double t, int cls, double* out) const {
    thread_local Trace scratch;
    forward_trace(x, t, cls, out, scratch);
}

void CondNet::forward_trace(const double* x, double t, int cls, double* out, Trace& tr) const {
    build_features(x, t, cls, tr.features, &tr.emb_row);
    int layers = cfg_.layer_count();
    tr.pre.resize(static_cast<size_t>(layers));
    tr.act.resize(static_cast<size_t>(layers));
    const std::vector<double>* in = &tr.features;
    for (int l = 0; l < layers; ++l) {
        int rows = widths_[static_cast<size_t>(l) + 1];
        int cols = widths_[static_cast<size_t>(l)];
        const double* w = params_.data() + w_off_[static_cast<size_t>(l)];
        const double* b = params_.data() + b_off_[static_cast<size_t>(l)];
        auto& z = tr.pre[static_cast<size_t>(l)];
        z.resize(static_cast<size_t>(rows));
        for (int i = 0; i < rows; ++i) {
            const double* wi = w + static_cast<size_t>(i) * cols;
            double acc = b[i];
            for (int j = 0; j < cols; ++j) acc += wi[j] * (*in)[static_cast<size_t>(j)];
            z[static_cast<size_t>(i)] = acc;
        }
        if (l + 1 < layers) {
            auto& a = tr.act[static_cast<size_t>(l)];
            a.resize(static_cast<size_t>(rows));
            for (int i = 0; i < rows; ++i) a[static_cast<size_t>(i)] = silu(z[static_cast<size_t>(i)]);
            in = &a;
        }
    }
    const auto& zout = tr.pre[static_cast<size_t>(layers) - 1];
    for (int i = 0; i < cfg_.out_dim; ++i) {
        out[i] = zout[static_cast<size_t>(i)];
        if (!std::isfinite(out[i])) throw std::runtime_error("net: non-finite output");
    }
}

Vec2 CondNet::forward2(const Vec2& x, double t, int cls) const {
    double in[2] = {x.x, x.y};
    double out[2];
    forward(in, t, cls, out);
    return {out[0], out[1]};
}

double CondNet::forward1(const Vec2& x, double t, int cls) const {
    double in[2] = {x.x, x.y};
    double out = 0.0;
    forward(in, t, cls, &out);
    return out;
}

void CondNet::backward(const Trace& tr, const double* out_adj, double* grad, double* x_adj) const {
    if (!trainable_ && grad != nullptr)
        throw std::logic_error("net: gradient pass over frozen (EMA) parameters");
    int layers = cfg_.layer_count();
    // delta starts as dL/dz at the output layer (linear head)
    std::vector<double> delta(out_adj, out_adj + cfg_.out_dim);
    std::vector<double> prev;
    for (int l = layers - 1; l >= 0; --l) {
        int rows = widths_[static_cast<size_t>(l) + 1];
        int cols = widths_[static_cast<size_t>(l)];
        const double* w = params_.data() + w_off_[static_cast<size_t>(l)];
        const std::vector<double>& in =
            (l == 0) ? tr.features : tr.act[static_cast<size_t>(l) - 1];
        if (grad != nullptr) {
            double* gw = grad + w_off_[static_cast<size_t>(l)];
            double* gb = grad + b_off_[static_cast<size_t>(l)];
            for (int i = 0; i < rows; ++i) {
                double d = delta[static_cast<size_t>(i)];
                double* gwi = gw + static_cast<size_t>(i) * cols;
                for (int j = 0; j < cols; ++j) gwi[j] += d * in[static_cast<size_t>(j)];
                gb[i] += d;
            }
        }
        bool need_below = (l > 0) || grad != nullptr || x_adj != nullptr;
        if (!need_below) break;
        prev.assign(static_cast<size_t>(cols), 0.0);
        for (int i = 0; i < rows; ++i) {
            double d = delta[static_cast<size_t>(i)];
            const double* wi = w + static_cast<size_t>(i) * cols;
            for (int j = 0; j < cols; ++j) prev[static_cast<size_t>(j)] += d * wi[j];
        }
        if (l > 0) {
            const auto& z = tr.pre[static_cast<size_t>(l) - 1];
            for (int j = 0; j < cols; ++j) prev[static_cast<size_t>(j)] *= silu_grad(z[static_cast<size_t>(j)]);
            delta = prev;
        }
    }
    // prev now holds dL/dfeatures
    if (x_adj != nullptr)
        for (int i = 0; i < cfg_.data_dim; ++i) x_adj[i] = prev[static_cast<size_t>(i)];
    if (grad != nullptr && cfg_.class_emb_dim > 0) {
        double* ge = grad + emb_off_ + tr.emb_row * cfg_.class_emb_dim;
        int base = cfg_.data_dim + 2 * cfg_.time_freqs;
        for (int i = 0; i < cfg_.class_emb_dim; ++i) ge[i] += prev[static_cast<size_t>(base + i)];
    }
}

TrainState::TrainState(const NetConfig& cfg, uint64_t init_seed, double mu)
    : net(cfg), ema(cfg), ema_mu(mu) {
    net.init_params(init_seed);
    ema.params() = net.params();
    ema.set_trainable(false);
}

void TrainState::adam_step(const std::vector<double>& grad, double lr, const AdamConfig& opt) {
    size_t n = net.params().size();
    if (grad.size() != n) throw std::invalid_argument("adam: gradient size mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) throw std::runtime_error("adam: non-finite gradient");
    if (m.empty()) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
    ++step;
    double c1 = 1.0 - std::pow(opt.beta1, double(step));
    double c2 = 1.0 - std::pow(opt.beta2, double(step));
    auto& p = net.params();
    for (size_t i = 0; i < n; ++i) {
        m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * grad[i];
        v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
        p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opt.eps);
    }
}

void TrainState::ema_update() {
    const auto& p = net.params();
    auto& e = ema.params();
    for (size_t i = 0; i < p.size(); ++i) e[i] = ema_mu * e[i] + (1.0 - ema_mu) * p[i];
}

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace pcmlab
