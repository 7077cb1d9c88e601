#include "pcmlab/toydata.hpp"

#include <cmath>
#include <stdexcept>

namespace pcmlab {

namespace {

// lower Cholesky factor of a 2x2 SPD matrix
struct Chol2 {
    double l11, l21, l22;
};

Chol2 cholesky(const Cov2& c) {
    if (!(c.xx > 0.0)) throw std::invalid_argument("mixture: covariance not positive definite");
    double l11 = std::sqrt(c.xx);
    double l21 = c.xy / l11;
    double rest = c.yy - l21 * l21;
    if (!(rest > 0.0)) throw std::invalid_argument("mixture: covariance not positive definite");
    return {l11, l21, std::sqrt(rest)};
}

}  // namespace

void MixtureSpec::validate() const {
    if (class_count < 1) throw std::invalid_argument("mixture: need at least one class");
    if (components.size() != static_cast<size_t>(class_count))
        throw std::invalid_argument("mixture: component list per class required");
    for (const auto& comps : components) {
        if (comps.empty()) throw std::invalid_argument("mixture: empty class");
        double total = 0.0;
        for (const auto& c : comps) {
            if (!(c.weight > 0.0)) throw std::invalid_argument("mixture: non-positive weight");
            cholesky(c.cov);
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-6)
            throw std::invalid_argument("mixture: class weights must sum to 1");
    }
}

MixtureSpec MixtureSpec::ring(int modes, double radius, double mode_std, int classes) {
    if (modes < 1 || classes < 1 || modes % classes != 0)
        throw std::invalid_argument("mixture: modes must divide evenly among classes");
    if (!(radius > 0.0) || !(mode_std > 0.0))
        throw std::invalid_argument("mixture: radius and mode std must be positive");
    MixtureSpec spec;
    spec.class_count = classes;
    spec.components.resize(static_cast<size_t>(classes));
    double w = double(classes) / double(modes);
    for (int k = 0; k < modes; ++k) {
        double a = 2.0 * M_PI * double(k) / double(modes);
        MixtureComponent c;
        c.mean = {radius * std::cos(a), radius * std::sin(a)};
        c.cov = {mode_std * mode_std, 0.0, mode_std * mode_std};
        c.weight = w;
        spec.components[static_cast<size_t>(k % classes)].push_back(c);
    }
    spec.validate();
    return spec;
}

Vec2 MixtureSpec::sample(int cls, StreamRng& rng) const {
    if (cls < 0 || cls >= class_count) throw std::invalid_argument("mixture: class out of range");
    const auto& comps = components[static_cast<size_t>(cls)];
    double u = rng.next_double();
    size_t pick = comps.size() - 1;
    double acc = 0.0;
    for (size_t i = 0; i < comps.size(); ++i) {
        acc += comps[i].weight;
        if (u < acc) {
            pick = i;
            break;
        }
    }
    const auto& c = comps[pick];
    Chol2 l = cholesky(c.cov);
    Vec2 z = rng.next_normal2();
    return {c.mean.x + l.l11 * z.x, c.mean.y + l.l21 * z.x + l.l22 * z.y};
}

double MixtureSpec::data_std() const {
    // equal-weight class mixture: E[x] and E[x x^T] from component moments
    Vec2 mean{0.0, 0.0};
    double exx = 0.0, eyy = 0.0;
    double cw = 1.0 / double(class_count);
    for (const auto& comps : components) {
        for (const auto& c : comps) {
            double w = cw * c.weight;
            mean += w * c.mean;
            exx += w * (c.cov.xx + c.mean.x * c.mean.x);
            eyy += w * (c.cov.yy + c.mean.y * c.mean.y);
        }
    }
    double vx = exx - mean.x * mean.x;
    double vy = eyy - mean.y * mean.y;
    return std::sqrt(0.5 * (vx + vy));
}

std::vector<MixtureSpec::Mode> MixtureSpec::modes() const {
    std::vector<Mode> out;
    for (int cls = 0; cls < class_count; ++cls)
        for (const auto& c : components[static_cast<size_t>(cls)]) out.push_back({c.mean, cls});
    return out;
}

int nearest_mode(const std::vector<MixtureSpec::Mode>& modes, const Vec2& p) {
    if (modes.empty()) throw std::invalid_argument("nearest_mode: no modes");
    int best = 0;
    double best_d = distance(modes[0].mean, p);
    for (size_t i = 1; i < modes.size(); ++i) {
        double d = distance(modes[i].mean, p);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

std::vector<Vec2> sample_data(const MixtureSpec& spec, int cls, int n, uint64_t seed) {
    if (n < 0) throw std::invalid_argument("sample_data: negative count");
    std::vector<Vec2> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        StreamRng rng(seed, stream::kData, static_cast<uint64_t>(i));
        out.push_back(spec.sample(cls, rng));
    }
    return out;
}

std::vector<LabeledPoint> sample_labeled(const MixtureSpec& spec, int n, uint64_t seed) {
    if (n < 0) throw std::invalid_argument("sample_labeled: negative count");
    std::vector<LabeledPoint> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        StreamRng rng(seed, stream::kData, static_cast<uint64_t>(i));
        int cls = static_cast<int>(rng.next_below(static_cast<uint64_t>(spec.class_count)));
        out.push_back({spec.sample(cls, rng), cls});
    }
    return out;
}

Vec2 forward_diffuse(const NoiseSchedule& sched, const Vec2& x0, double t, const Vec2& noise) {
    auto [a, s] = sched.alpha_sigma(t);
    return a * x0 + s * noise;
}

Vec2 diffuse_between(const NoiseSchedule& sched, const Vec2& x_u, double u, double s,
                     const Vec2& noise) {
    if (s < u) throw std::domain_error("diffuse_between: target time before source time");
    auto [au, su] = sched.alpha_sigma(u);
    auto [as, ss] = sched.alpha_sigma(s);
    double k = as / au;
    double var = ss * ss - k * k * su * su; // >= 0 analytically, clamp roundoff
    double tau = std::sqrt(std::max(var, 0.0));
    return k * x_u + tau * noise;
}

double GaussianOracle::marginal_var(const NoiseSchedule& sched, double t) const {
    auto [a, s] = sched.alpha_sigma(t);
    return a * a * stddev * stddev + s * s;
}

Vec2 GaussianOracle::epsilon(const NoiseSchedule& sched, const Vec2& x, double t) const {
    auto [a, s] = sched.alpha_sigma(t);
    double mv = a * a * stddev * stddev + s * s;
    return (s / mv) * (x - a * mean);
}

Vec2 GaussianOracle::ode_solution(const NoiseSchedule& sched, const Vec2& x_t, double t,
                                  double s) const {
    double vt = std::sqrt(marginal_var(sched, t));
    double vs = std::sqrt(marginal_var(sched, s));
    double at = sched.alpha(t);
    double as = sched.alpha(s);
    return (vs / vt) * x_t + (as - at * vs / vt) * mean;
}

Vec2 GaussianOracle::sample(StreamRng& rng) const {
    return mean + stddev * rng.next_normal2();
}

int DataRef::class_count() const {
    if (mix != nullptr) return mix->class_count;
    return 1;
}

Vec2 DataRef::sample(int cls, StreamRng& rng) const {
    if (mix != nullptr) return mix->sample(cls, rng);
    if (gauss != nullptr) return gauss->sample(rng);
    throw std::logic_error("data ref: no source attached");
}

double DataRef::data_std() const {
    if (mix != nullptr) return mix->data_std();
    if (gauss != nullptr) return gauss->stddev;
    throw std::logic_error("data ref: no source attached");
}

}  // namespace pcmlab
