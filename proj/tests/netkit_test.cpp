#include "pcmlab/netkit.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pcmlab/rng.hpp"

using namespace pcmlab;

namespace {

void randomize(CondNet& net, uint64_t seed) {
    StreamRng rng(seed, 99, 0);
    for (double& p : net.params()) p = rng.next_uniform(-0.3, 0.3);
}

double silu(double z) { return z / (1.0 + std::exp(-z)); }

struct Probe {
    Vec2 x;
    double t;
    int cls;
    double adj[2];
};

// scalar objective sum_k adj_k . f(x_k); its gradient exercises every layer
// and, with the class choices below, every embedding row
double probe_loss(const CondNet& net, const std::vector<Probe>& probes) {
    double loss = 0.0;
    for (const Probe& p : probes) {
        const Vec2 out = net.forward2(p.x, p.t, p.cls);
        loss += p.adj[0] * out.x + p.adj[1] * out.y;
    }
    return loss;
}

std::vector<Probe> default_probes() {
    return {{{0.3, -0.2}, 0.5, 0, {0.7, -0.4}},
            {{-1.1, 0.8}, 0.05, 1, {-0.3, 0.9}},
            {{0.4, 1.5}, 0.93, kNullClass, {0.5, 0.25}}};
}

std::vector<double> analytic_grad(const CondNet& net, const std::vector<Probe>& probes) {
    std::vector<double> grad(static_cast<size_t>(net.param_count()), 0.0);
    CondNet::Trace tr;
    for (const Probe& p : probes) {
        const double in[2] = {p.x.x, p.x.y};
        double out[2];
        net.forward_trace(in, p.t, p.cls, out, tr);
        net.backward(tr, p.adj, grad.data(), nullptr);
    }
    return grad;
}

}  // namespace

TEST(NetConfig, Shapes) {
    NetConfig cfg;
    EXPECT_EQ(cfg.feature_dim(), 2 + 16 + 8);
    EXPECT_EQ(cfg.widths(), (std::vector<int>{26, 64, 64, 64, 2}));
    // layer weights + biases, then a (class_count + 1) x emb_dim table
    const int expect = (26 * 64 + 64) + 2 * (64 * 64 + 64) + (64 * 2 + 2) + 3 * 8;
    EXPECT_EQ(cfg.param_count(), expect);
    EXPECT_EQ(CondNet(cfg).param_count(), expect);

    NetConfig bad = cfg;
    bad.hidden_width = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(CondNet, ZeroInitializedHeadPredictsZero) {
    NetConfig cfg;
    CondNet net(cfg);
    net.init_params(4);
    StreamRng rng(3, stream::kEval, 0);
    for (int i = 0; i < 50; ++i) {
        const Vec2 x = 3.0 * rng.next_normal2();
        const double t = rng.next_uniform(0.001, 1.0);
        const Vec2 out = net.forward2(x, t, i % 3 - 1);
        EXPECT_EQ(out.x, 0.0);
        EXPECT_EQ(out.y, 0.0);
    }
}

TEST(CondNet, GoldenForward) {
    // frozen output of the full stack (features, SiLU layers, linear head)
    NetConfig cfg;
    CondNet net(cfg);
    randomize(net, 7);
    const Vec2 out = net.forward2({0.3, -0.2}, 0.5, 1);
    EXPECT_DOUBLE_EQ(out.x, -0.50364345642863628);
    EXPECT_DOUBLE_EQ(out.y, 0.058773343964108389);
    const Vec2 out_null = net.forward2({0.3, -0.2}, 0.5, kNullClass);
    EXPECT_DOUBLE_EQ(out_null.x, -0.52200331429978286);
    EXPECT_DOUBLE_EQ(out_null.y, 0.033546882602235775);
}

TEST(CondNet, HandComputedTinyNet) {
    NetConfig cfg;
    cfg.out_dim = 1;
    cfg.hidden_width = 1;
    cfg.hidden_layers = 1;
    cfg.time_freqs = 1; // single frequency of 1.0: features sin(t), cos(t)
    cfg.class_count = 1;
    cfg.class_emb_dim = 1;
    ASSERT_EQ(cfg.feature_dim(), 5);
    CondNet net(cfg);
    auto& p = net.params();
    ASSERT_EQ(p.size(), 5u + 1 + 1 + 1 + 2); // W1 b1 W2 b2 emb(2 rows)
    const double w1[5] = {0.2, -0.1, 0.4, 0.3, -0.5};
    for (int i = 0; i < 5; ++i) p[static_cast<size_t>(net.weight_offset(0) + i)] = w1[i];
    p[static_cast<size_t>(net.bias_offset(0))] = 0.05;
    p[static_cast<size_t>(net.weight_offset(1))] = 1.5;
    p[static_cast<size_t>(net.bias_offset(1))] = -0.2;
    p[static_cast<size_t>(net.embedding_offset())] = 0.7;     // class 0
    p[static_cast<size_t>(net.embedding_offset() + 1)] = 0.9; // null row

    const double t = 0.8;
    const double feats[5] = {0.6, -1.2, std::sin(t), std::cos(t), 0.7};
    double pre = 0.05;
    for (int i = 0; i < 5; ++i) pre += w1[i] * feats[i];
    const double want = 1.5 * silu(pre) - 0.2;
    EXPECT_NEAR(net.forward1({0.6, -1.2}, t, 0), want, 1e-14);

    // the null class swaps in the last embedding row
    const double feats_null[5] = {0.6, -1.2, std::sin(t), std::cos(t), 0.9};
    double pre_null = 0.05;
    for (int i = 0; i < 5; ++i) pre_null += w1[i] * feats_null[i];
    EXPECT_NEAR(net.forward1({0.6, -1.2}, t, kNullClass), 1.5 * silu(pre_null) - 0.2, 1e-14);
}

TEST(CondNet, LinearWhenNoHiddenLayers) {
    // hidden_layers = 0 leaves a single linear map, so superposition is exact
    NetConfig cfg;
    cfg.hidden_layers = 0;
    CondNet net(cfg);
    randomize(net, 21);
    const double t = 0.4;
    const Vec2 a = net.forward2({1.0, 0.0}, t, 0);
    const Vec2 b = net.forward2({0.0, 1.0}, t, 0);
    const Vec2 zero = net.forward2({0.0, 0.0}, t, 0);
    const Vec2 mix = net.forward2({2.0, -3.0}, t, 0);
    EXPECT_NEAR(mix.x, zero.x + 2.0 * (a.x - zero.x) - 3.0 * (b.x - zero.x), 1e-12);
    EXPECT_NEAR(mix.y, zero.y + 2.0 * (a.y - zero.y) - 3.0 * (b.y - zero.y), 1e-12);
}

TEST(CondNet, GradientMatchesFiniteDifferences) {
    NetConfig cfg;
    CondNet net(cfg);
    randomize(net, 11);
    const std::vector<Probe> probes = default_probes();
    const std::vector<double> grad = analytic_grad(net, probes);

    const double h = 1e-5;
    int checked = 0;
    for (int i = 0; i < net.param_count(); ++i) {
        const double saved = net.params()[static_cast<size_t>(i)];
        net.params()[static_cast<size_t>(i)] = saved + h;
        const double up = probe_loss(net, probes);
        net.params()[static_cast<size_t>(i)] = saved - h;
        const double dn = probe_loss(net, probes);
        net.params()[static_cast<size_t>(i)] = saved;
        const double fd = (up - dn) / (2.0 * h);
        const double g = grad[static_cast<size_t>(i)];
        const double rel = std::fabs(g - fd) / std::max({std::fabs(g), std::fabs(fd), 1e-6});
        ASSERT_LT(rel, 1e-4) << "param " << i;
        ++checked;
    }
    EXPECT_EQ(checked, net.param_count());
}

TEST(CondNet, InputAdjointMatchesFiniteDifferences) {
    NetConfig cfg;
    CondNet net(cfg);
    randomize(net, 13);
    const Vec2 x{0.7, -1.3};
    const double t = 0.33;
    const double adj[2] = {0.6, -1.1};

    CondNet::Trace tr;
    const double in[2] = {x.x, x.y};
    double out[2];
    net.forward_trace(in, t, 1, out, tr);
    std::vector<double> grad(static_cast<size_t>(net.param_count()), 0.0);
    double x_adj[2] = {0.0, 0.0};
    net.backward(tr, adj, grad.data(), x_adj);

    const double h = 1e-6;
    for (int d = 0; d < 2; ++d) {
        Vec2 xp = x, xm = x;
        (d == 0 ? xp.x : xp.y) += h;
        (d == 0 ? xm.x : xm.y) -= h;
        const Vec2 up = net.forward2(xp, t, 1);
        const Vec2 dn = net.forward2(xm, t, 1);
        const double fd = (adj[0] * (up.x - dn.x) + adj[1] * (up.y - dn.y)) / (2.0 * h);
        EXPECT_NEAR(x_adj[d], fd, 1e-5 * std::max(1.0, std::fabs(fd)));
    }
}

TEST(CondNet, ErrorPaths) {
    NetConfig cfg;
    CondNet net(cfg);
    net.init_params(1);
    EXPECT_THROW(net.forward2({0.0, 0.0}, 0.5, 2), std::invalid_argument);
    EXPECT_THROW(net.forward2({0.0, 0.0}, 0.5, -7), std::invalid_argument);

    CondNet nan_net(cfg);
    randomize(nan_net, 2);
    nan_net.params()[5] = std::nan("");
    EXPECT_THROW(nan_net.forward2({0.1, 0.1}, 0.5, 0), std::runtime_error);
}

TEST(TrainState, FrozenEmaRejectsBackward) {
    NetConfig cfg;
    TrainState ts(cfg, 1, 0.99);
    EXPECT_FALSE(ts.ema.trainable());
    EXPECT_EQ(ts.ema.params(), ts.net.params()); // EMA starts as an exact copy

    CondNet::Trace tr;
    double out[2];
    const double x[2] = {0.2, 0.3};
    ts.ema.forward_trace(x, 0.5, 0, out, tr);
    const double adj[2] = {1.0, 0.0};
    std::vector<double> grad(static_cast<size_t>(ts.ema.param_count()), 0.0);
    EXPECT_THROW(ts.ema.backward(tr, adj, grad.data(), nullptr), std::logic_error);
}

TEST(TrainState, AdamZeroGradientIsNoOp) {
    NetConfig cfg;
    TrainState ts(cfg, 5, 0.99);
    randomize(ts.net, 31);
    const std::vector<double> before = ts.net.params();
    std::vector<double> grad(before.size(), 0.0);
    ts.adam_step(grad, 1e-3);
    EXPECT_EQ(ts.net.params(), before);
}

TEST(TrainState, AdamFirstStepAndDeterminism) {
    NetConfig cfg;
    TrainState ts(cfg, 5, 0.99);
    randomize(ts.net, 31);
    const std::vector<double> before = ts.net.params();

    // on the very first step bias correction reduces the update to
    // p -= lr * g / (|g| + eps)
    std::vector<double> grad(before.size(), 0.0);
    grad[7] = 0.25;
    grad[100] = -3.0;
    const double lr = 1e-3;
    ts.adam_step(grad, lr);
    AdamConfig opt;
    for (size_t i : {size_t{7}, size_t{100}, size_t{0}}) {
        const double g = grad[i];
        const double want =
            g == 0.0 ? before[i] : before[i] - lr * g / (std::fabs(g) + opt.eps);
        EXPECT_NEAR(ts.net.params()[i], want, 1e-12);
    }

    // identical gradient history gives identical parameters
    TrainState t2(cfg, 5, 0.99);
    randomize(t2.net, 31);
    t2.adam_step(grad, lr);
    EXPECT_EQ(t2.net.params(), ts.net.params());

    std::vector<double> small(3, 0.0);
    EXPECT_THROW(ts.adam_step(small, lr), std::invalid_argument);
    grad[0] = std::nan("");
    EXPECT_THROW(ts.adam_step(grad, lr), std::runtime_error);
}

TEST(TrainState, EmaUpdate) {
    NetConfig cfg;

    TrainState zero_mu(cfg, 2, 0.0);
    randomize(zero_mu.net, 51);
    zero_mu.ema_update();
    EXPECT_EQ(zero_mu.ema.params(), zero_mu.net.params()); // mu = 0 copies

    TrainState one_mu(cfg, 2, 1.0);
    const std::vector<double> frozen = one_mu.ema.params();
    randomize(one_mu.net, 52);
    one_mu.ema_update();
    EXPECT_EQ(one_mu.ema.params(), frozen); // mu = 1 never moves

    TrainState ts(cfg, 2, 0.99);
    const std::vector<double> e0 = ts.ema.params();
    randomize(ts.net, 53);
    ts.ema_update();
    ts.ema_update();
    // e2 = mu^2 e0 + (1 - mu^2) p for a constant parameter vector
    for (size_t i = 0; i < e0.size(); ++i) {
        const double want = 0.9801 * e0[i] + 0.0199 * ts.net.params()[i];
        ASSERT_NEAR(ts.ema.params()[i], want, 1e-12);
    }
}
