#pragma once

#include <utility>
#include <vector>

namespace pcmlab {

// Continuous variance-preserving noise schedule on t in [t_min, t_max] with
// linear beta(t) = beta_min + (beta_max - beta_min) t.  Closed forms:
//   B(t)      = beta_min t + (beta_max - beta_min) t^2 / 2
//   alpha(t)  = exp(-B(t) / 2)
//   sigma(t)  = sqrt(1 - exp(-B(t)))
//   lambda(t) = log(alpha(t) / sigma(t))
// alpha^2 + sigma^2 = 1 holds identically, and lambda is strictly decreasing,
// so log-SNR values invert in closed form (no root finding at runtime).
struct NoiseSchedule {
    double t_min = 1e-3;
    double t_max = 1.0;
    double beta_min = 0.1;
    double beta_max = 20.0;

    void validate() const;           // throws std::invalid_argument
    void check_time(double t) const; // throws std::domain_error outside [t_min, t_max]

    double beta(double t) const;
    double beta_integral(double t) const; // B(t)
    double alpha(double t) const;
    double sigma(double t) const;
    std::pair<double, double> alpha_sigma(double t) const;
    double log_snr(double t) const;
    // inverse of log_snr; domain error if lambda is outside [lambda(t_max), lambda(t_min)]
    double t_of_log_snr(double lambda) const;

    // probability-flow ODE coefficients: dx = [f_t x - g_t^2/2 * score] dt
    double drift_coeff(double t) const;   // f_t = -beta(t)/2
    double diffusion_sq(double t) const;  // g_t^2 = beta(t)
};

// Uniform discretization of [t_min, t_max] into n intervals (n+1 points).
struct TimestepGrid {
    std::vector<double> times; // ascending, times.front() == t_min, times.back() == t_max

    static TimestepGrid uniform(const NoiseSchedule& sched, int intervals);

    int intervals() const { return static_cast<int>(times.size()) - 1; }
};

// Split of the grid into M contiguous phases.  edges holds M+1 grid indices,
// edges[0] = 0 and edges[M] = N; phase m covers grid interval [edges[m], edges[m+1]].
struct PhasePartition {
    TimestepGrid grid;
    std::vector<int> edges;

    // edges at round(j * N / M), half away from zero; duplicate edges rejected
    static PhasePartition uniform(TimestepGrid grid, int phases);
    static PhasePartition with_edges(TimestepGrid grid, std::vector<int> edges);

    int phases() const { return static_cast<int>(edges.size()) - 1; }
    double edge_time(int m) const { return grid.times[static_cast<size_t>(edges[m])]; }
    // phase containing t; a t exactly on an interior edge belongs to the phase below
    int phase_of(double t) const;
    // phase whose index range [edges[m], edges[m+1]] contains [lo, hi], or -1
    int phase_containing(int lo, int hi) const;
};

}  // namespace pcmlab
