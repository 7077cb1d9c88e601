#pragma once

#include <cstdint>
#include <vector>

#include "pcmlab/vec2.hpp"

namespace pcmlab {

// class id for the unconditional (null) embedding row
constexpr int kNullClass = -1;

struct NetConfig {
    int data_dim = 2;
    int out_dim = 2;
    int hidden_width = 64;
    int hidden_layers = 3;
    int time_freqs = 8;        // sin/cos pairs, geometric frequencies 1..time_freq_max
    double time_freq_max = 10.0;  // finest wavelength ~3x the default grid spacing
    int class_count = 2;       // embedding table has class_count + 1 rows (null last)
    int class_emb_dim = 8;

    void validate() const;
    int feature_dim() const { return data_dim + 2 * time_freqs + class_emb_dim; }
    int layer_count() const { return hidden_layers + 1; }
    std::vector<int> widths() const; // [feature_dim, hidden.., out_dim]
    int param_count() const;
};

// Small MLP on [x | sin/cos time features | class embedding] with SiLU hidden
// activations and a linear head.  Parameters live in one flat vector (layer
// weights row-major, then biases, then the embedding table) so the optimizer,
// EMA tracking and serialization all work on a single span.
class CondNet {
  public:
    explicit CondNet(NetConfig cfg);

    const NetConfig& config() const { return cfg_; }
    int param_count() const { return static_cast<int>(params_.size()); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // nets holding EMA weights are frozen; backward on them throws
    void set_trainable(bool on) { trainable_ = on; }
    bool trainable() const { return trainable_; }

    void init_params(uint64_t seed);

    struct Trace {
        std::vector<double> features;
        std::vector<std::vector<double>> pre; // pre-activations per layer
        std::vector<std::vector<double>> act; // post-activations per hidden layer
        int emb_row = 0;
    };

    void forward(const double* x, double t, int cls, double* out) const;
    void forward_trace(const double* x, double t, int cls, double* out, Trace& tr) const;
    Vec2 forward2(const Vec2& x, double t, int cls) const;   // out_dim == 2
    double forward1(const Vec2& x, double t, int cls) const; // out_dim == 1

    // Accumulates dL/dparams into grad (length param_count) if grad != nullptr
    // and writes dL/dx into x_adj (length data_dim) if x_adj != nullptr.
    void backward(const Trace& tr, const double* out_adj, double* grad, double* x_adj) const;

    int weight_offset(int layer) const { return w_off_[static_cast<size_t>(layer)]; }
    int bias_offset(int layer) const { return b_off_[static_cast<size_t>(layer)]; }
    int embedding_offset() const { return emb_off_; }

  private:
    void build_features(const double* x, double t, int cls, std::vector<double>& f, int* row) const;

    NetConfig cfg_;
    std::vector<int> widths_;
    std::vector<int> w_off_, b_off_;
    int emb_off_ = 0;
    std::vector<double> params_;
    bool trainable_ = true;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Optimizer state for one network plus its EMA shadow.  The EMA net is frozen
// at construction, so a gradient pass over it is a hard error by design.
struct TrainState {
    CondNet net;
    CondNet ema;
    std::vector<double> m, v;
    int64_t step = 0;
    double ema_mu = 0.99;

    TrainState(const NetConfig& cfg, uint64_t init_seed, double mu);

    void adam_step(const std::vector<double>& grad, double lr, const AdamConfig& opt = {});
    void ema_update(); // ema <- mu * ema + (1 - mu) * net
};

double l2_norm(const std::vector<double>& v);

}  // namespace pcmlab
