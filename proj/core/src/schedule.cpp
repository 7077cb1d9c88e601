#include "pcmlab/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pcmlab {

void NoiseSchedule::validate() const {
    if (!(t_min > 0.0) || !(t_max > t_min))
        throw std::invalid_argument("schedule: need 0 < t_min < t_max");
    if (!(beta_min > 0.0) || !(beta_max < 1e4) || beta_max < beta_min)
        throw std::invalid_argument("schedule: need 0 < beta_min <= beta_max < 1e4");
}

void NoiseSchedule::check_time(double t) const {
    if (!(t >= t_min && t <= t_max))
        throw std::domain_error("schedule: t=" + std::to_string(t) + " outside [" +
                                std::to_string(t_min) + ", " + std::to_string(t_max) + "]");
}

double NoiseSchedule::beta(double t) const {
    return beta_min + (beta_max - beta_min) * t;
}

double NoiseSchedule::beta_integral(double t) const {
    return beta_min * t + 0.5 * (beta_max - beta_min) * t * t;
}

double NoiseSchedule::alpha(double t) const {
    check_time(t);
    return std::exp(-0.5 * beta_integral(t));
}

double NoiseSchedule::sigma(double t) const {
    check_time(t);
    // sqrt(1 - exp(-B)) via expm1 to keep precision near t_min
    return std::sqrt(-std::expm1(-beta_integral(t)));
}

std::pair<double, double> NoiseSchedule::alpha_sigma(double t) const {
    check_time(t);
    double b = beta_integral(t);
    return {std::exp(-0.5 * b), std::sqrt(-std::expm1(-b))};
}

double NoiseSchedule::log_snr(double t) const {
    check_time(t);
    double b = beta_integral(t);
    // log(alpha/sigma) = -B/2 - log(1 - e^-B)/2
    return -0.5 * b - 0.5 * std::log(-std::expm1(-b));
}

double NoiseSchedule::t_of_log_snr(double lambda) const {
    // alpha^2/sigma^2 = e^-B/(1-e^-B) = e^{2 lambda}  =>  B = log(1 + e^{-2 lambda})
    double b = (lambda < -350.0) ? -2.0 * lambda : std::log1p(std::exp(-2.0 * lambda));
    double t;
    if (beta_max == beta_min) {
        t = b / beta_min;
    } else {
        // beta_min t + (beta_max-beta_min) t^2/2 = B, positive root
        double c = beta_max - beta_min;
        t = (-beta_min + std::sqrt(beta_min * beta_min + 2.0 * c * b)) / c;
    }
    // tolerate roundoff at the endpoints, reject genuinely out-of-range values
    double slack = 1e-9 * (t_max - t_min);
    if (t < t_min - slack || t > t_max + slack)
        throw std::domain_error("schedule: log-SNR " + std::to_string(lambda) +
                                " maps outside the time range");
    return std::min(std::max(t, t_min), t_max);
}

double NoiseSchedule::drift_coeff(double t) const {
    return -0.5 * beta(t);
}

double NoiseSchedule::diffusion_sq(double t) const {
    return beta(t);
}

TimestepGrid TimestepGrid::uniform(const NoiseSchedule& sched, int intervals) {
    sched.validate();
    if (intervals < 1) throw std::invalid_argument("grid: need at least 1 interval");
    TimestepGrid g;
    g.times.resize(static_cast<size_t>(intervals) + 1);
    double span = sched.t_max - sched.t_min;
    for (int i = 0; i <= intervals; ++i)
        g.times[static_cast<size_t>(i)] = sched.t_min + span * double(i) / double(intervals);
    g.times.front() = sched.t_min; // endpoints pinned exactly
    g.times.back() = sched.t_max;
    return g;
}

PhasePartition PhasePartition::uniform(TimestepGrid grid, int phases) {
    int n = grid.intervals();
    if (phases < 1) throw std::invalid_argument("partition: need at least 1 phase");
    if (phases > n) throw std::invalid_argument("partition: more phases than grid intervals");
    std::vector<int> e(static_cast<size_t>(phases) + 1);
    for (int j = 0; j <= phases; ++j)
        e[static_cast<size_t>(j)] = static_cast<int>(std::lround(double(j) * double(n) / double(phases)));
    return with_edges(std::move(grid), std::move(e));
}

PhasePartition PhasePartition::with_edges(TimestepGrid grid, std::vector<int> edges) {
    int n = grid.intervals();
    if (edges.size() < 2) throw std::invalid_argument("partition: need at least 2 edges");
    if (edges.front() != 0 || edges.back() != n)
        throw std::invalid_argument("partition: edges must start at 0 and end at the last grid index");
    for (size_t j = 1; j < edges.size(); ++j)
        if (edges[j] <= edges[j - 1])
            throw std::invalid_argument("partition: edges must be strictly increasing");
    PhasePartition p;
    p.grid = std::move(grid);
    p.edges = std::move(edges);
    return p;
}

int PhasePartition::phase_of(double t) const {
    if (t < grid.times.front() || t > grid.times.back())
        throw std::domain_error("partition: t outside the grid range");
    // interior edges resolve to the phase below them
    int m = phases() - 1;
    while (m > 0 && t <= edge_time(m)) --m;
    return m;
}

int PhasePartition::phase_containing(int lo, int hi) const {
    if (lo < 0 || hi < lo || hi > grid.intervals()) return -1;
    for (int m = 0; m < phases(); ++m)
        if (edges[static_cast<size_t>(m)] <= lo && hi <= edges[static_cast<size_t>(m) + 1]) return m;
    return -1;
}

}  // namespace pcmlab
