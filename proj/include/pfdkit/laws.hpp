#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

namespace pfdkit {

// Revealed-failure repairable component: probability of failure to
// start gamma, failure rate lambda, repair rate mu. Unavailability
// relaxes exponentially to lambda/(lambda+mu).
struct Glm {
    double gamma = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
};

// Failure revealed only by a periodic test: rate lambda, repair rate mu
// once detected, test interval tau, first test at theta.
struct PeriodicTest {
    double lambda = 0.0;
    double mu = 0.0;
    double tau = 0.0;
    double theta = 0.0;
};

// Failure never detected within the horizon.
struct Exponential {
    double lambda = 0.0;
};

using Law = std::variant<Glm, PeriodicTest, Exponential>;

namespace detail {

inline double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

// (exp(-b*dt) - exp(-a*dt)) / (a - b), continuous at a == b. The
// expression is symmetric in (a, b); factoring out the slower decay
// keeps expm1 on a non-positive argument.
inline double exp_difference(double a, double b, double dt) {
    const double lo = std::min(a, b);
    const double d = std::max(a, b) - lo;
    if (d == 0.0) return dt * std::exp(-lo * dt);
    return std::exp(-lo * dt) * (-std::expm1(-d * dt)) / d;
}

}  // namespace detail

inline double q_glm(const Glm& law, double t) {
    if (t < 0.0) throw std::invalid_argument("q_glm: t must be >= 0");
    const double total = law.lambda + law.mu;
    if (total == 0.0) return detail::clamp01(law.gamma);
    const double q_inf = law.lambda / total;
    return detail::clamp01(q_inf + (law.gamma - q_inf) * std::exp(-total * t));
}

inline double q_exponential(const Exponential& law, double t) {
    if (t < 0.0) throw std::invalid_argument("q_exponential: t must be >= 0");
    return detail::clamp01(-std::expm1(-law.lambda * t));
}

namespace detail {

// State of the three-state periodic-test component: working, failed
// undetected, failed under repair. Mass is conserved (w + u + r = 1).
struct PeriodicState {
    double w = 1.0;
    double u = 0.0;
    double r = 0.0;
};

// In-phase evolution over dt (no test instant inside):
//   dw/dt = -lambda w + mu r,  du/dt = lambda w,  dr/dt = -mu r.
inline PeriodicState periodic_phase_step(const PeriodicTest& law, PeriodicState s,
                                         double dt) {
    PeriodicState out;
    out.r = s.r * std::exp(-law.mu * dt);
    out.w = s.w * std::exp(-law.lambda * dt) +
            s.r * law.mu * exp_difference(law.lambda, law.mu, dt);
    out.u = clamp01(1.0 - out.w - out.r);
    return out;
}

// Test instant: everything undetected becomes detected and under repair.
inline PeriodicState periodic_apply_test(PeriodicState s) {
    s.r += s.u;
    s.u = 0.0;
    return s;
}

}  // namespace detail

// Unavailability q(t) = P(undetected) + P(under repair), walking the
// piecewise-exponential solution across the test instants theta + k*tau.
inline double q_periodic_test(const PeriodicTest& law, double t) {
    if (t < 0.0) throw std::invalid_argument("q_periodic_test: t must be >= 0");
    if (law.tau <= 0.0) throw std::invalid_argument("q_periodic_test: tau must be > 0");
    if (law.theta < 0.0 || law.theta > law.tau)
        throw std::invalid_argument("q_periodic_test: need 0 <= theta <= tau");
    detail::PeriodicState s;
    double now = 0.0;
    double next_test = law.theta;
    while (next_test <= t) {
        s = detail::periodic_phase_step(law, s, next_test - now);
        s = detail::periodic_apply_test(s);
        now = next_test;
        next_test += law.tau;
    }
    s = detail::periodic_phase_step(law, s, t - now);
    return detail::clamp01(s.u + s.r);
}

inline double unavailability(const Law& law, double t) {
    return std::visit([t](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Glm>) return q_glm(l, t);
        else if constexpr (std::is_same_v<T, PeriodicTest>) return q_periodic_test(l, t);
        else return q_exponential(l, t);
    }, law);
}

// Repeated evaluation helper: caches the state at the start of each
// test phase so time-ordered queries stay O(1) amortized.
class PeriodicTestCurve {
public:
    explicit PeriodicTestCurve(const PeriodicTest& law) : law_(law) {
        if (law.tau <= 0.0)
            throw std::invalid_argument("PeriodicTestCurve: tau must be > 0");
        if (law.theta < 0.0 || law.theta > law.tau)
            throw std::invalid_argument("PeriodicTestCurve: need 0 <= theta <= tau");
        phase_starts_.push_back({0.0, detail::PeriodicState{}});
    }

    double operator()(double t) const {
        if (t < 0.0) throw std::invalid_argument("PeriodicTestCurve: t must be >= 0");
        // Phase p >= 1 starts right after the test at theta + (p-1)*tau.
        std::size_t phase = 0;
        if (t >= law_.theta)
            phase = 1 + static_cast<std::size_t>(std::floor((t - law_.theta) / law_.tau));
        extend(phase);
        const auto& [start, state] = phase_starts_[phase];
        const auto s = detail::periodic_phase_step(law_, state, t - start);
        return detail::clamp01(s.u + s.r);
    }

private:
    void extend(std::size_t phase) const {
        while (phase_starts_.size() <= phase) {
            const std::size_t k = phase_starts_.size();  // build phase k from k-1
            const double boundary = law_.theta + (static_cast<double>(k) - 1.0) * law_.tau;
            const auto& [start, state] = phase_starts_.back();
            auto s = detail::periodic_phase_step(law_, state, boundary - start);
            phase_starts_.push_back({boundary, detail::periodic_apply_test(s)});
        }
    }

    PeriodicTest law_;
    mutable std::vector<std::pair<double, detail::PeriodicState>> phase_starts_;
};

}  // namespace pfdkit
