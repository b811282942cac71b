#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfdkit/scenario.hpp"

namespace pfdkit {

// A channel occupies exactly one mode (unlike fault-tree basic events,
// which are independent).
enum class ChannelMode { ok = 0, dd = 1, dut = 2, rep_dut = 3, duu = 4 };
inline constexpr int kChannelModes = 5;

// Aggregated state: how many of the n identical channels sit in each mode.
struct MarkovState {
    std::array<int, kChannelModes> counts{};

    int ok() const { return counts[0]; }
    bool operator==(const MarkovState&) const = default;
    bool operator<(const MarkovState& other) const { return counts < other.counts; }
};

// Aggregated-count Markov model of one proof-test phase, plus the
// deterministic linking map applied at phase boundaries (failures found
// by the proof test move to the under-repair mode).
struct MarkovModel {
    int n_channels = 0;
    int m_required = 0;
    std::vector<MarkovState> states;
    std::vector<double> generator;   // row-major, row sums 0
    std::vector<std::uint8_t> eff;   // 1 when fewer than m channels are OK
    double phase_duration = 0.0;     // = t1
    std::vector<int> linking;        // end-of-phase state -> next-phase state
    std::vector<double> initial;     // all mass on the all-OK state

    double rate(int from, int to) const {
        return generator[static_cast<std::size_t>(from) * states.size() + to];
    }
    int index_of(const MarkovState& state) const {
        for (std::size_t i = 0; i < states.size(); ++i)
            if (states[i] == state) return static_cast<int>(i);
        throw std::invalid_argument("state not in model");
    }
};

namespace detail {

inline void enumerate_states(int n, std::vector<MarkovState>& out) {
    for (int ok = n; ok >= 0; --ok)
        for (int dd = n - ok; dd >= 0; --dd)
            for (int dut = n - ok - dd; dut >= 0; --dut)
                for (int rep = n - ok - dd - dut; rep >= 0; --rep)
                    out.push_back({{ok, dd, dut, rep, n - ok - dd - dut - rep}});
}

}  // namespace detail

// Builds the phase generator. From a state with k operating channels,
// each failure mode contributes an independent transition (one channel
// moves, rate k*(1-beta)*lambda) and a common-cause transition (all k
// operating channels move at once, rate beta*lambda; channels already
// failed keep their modes). Online repairs run at j*mu_dd, proof-test
// repairs at r*mu_dut. DUT and DUU have no in-phase exit.
inline MarkovModel build_markov(const Scenario& s) {
    s.validate();
    const DerivedRates r = derive_rates(s);
    MarkovModel model;
    model.n_channels = s.n;
    model.m_required = s.m;
    model.phase_duration = s.t1;
    detail::enumerate_states(s.n, model.states);
    const std::size_t count = model.states.size();
    std::map<MarkovState, int> index;
    for (std::size_t i = 0; i < count; ++i) index.emplace(model.states[i], static_cast<int>(i));

    model.generator.assign(count * count, 0.0);
    auto add_rate = [&](int from, const MarkovState& to, double rate) {
        if (rate <= 0.0) return;
        const int j = index.at(to);
        model.generator[static_cast<std::size_t>(from) * count + j] += rate;
        model.generator[static_cast<std::size_t>(from) * count + from] -= rate;
    };

    struct Mode {
        ChannelMode mode;
        double lambda, beta;
    };
    const Mode modes[] = {
        {ChannelMode::dd, r.lambda_dd, s.beta_dd},
        {ChannelMode::dut, r.lambda_dut, s.beta_dut},
        {ChannelMode::duu, r.lambda_duu, s.beta_duu},
    };

    for (std::size_t i = 0; i < count; ++i) {
        const MarkovState& st = model.states[i];
        const int from = static_cast<int>(i);
        const int k = st.ok();
        if (k >= 1) {
            for (const Mode& mode : modes) {
                const int target = static_cast<int>(mode.mode);
                MarkovState one = st;
                one.counts[0] -= 1;
                one.counts[target] += 1;
                add_rate(from, one, k * (1.0 - mode.beta) * mode.lambda);
                MarkovState all = st;
                all.counts[0] = 0;
                all.counts[target] += k;
                add_rate(from, all, mode.beta * mode.lambda);
            }
        }
        if (st.counts[static_cast<int>(ChannelMode::dd)] >= 1) {
            MarkovState repaired = st;
            repaired.counts[static_cast<int>(ChannelMode::dd)] -= 1;
            repaired.counts[0] += 1;
            add_rate(from, repaired,
                     st.counts[static_cast<int>(ChannelMode::dd)] * s.mu_dd);
        }
        if (st.counts[static_cast<int>(ChannelMode::rep_dut)] >= 1) {
            MarkovState repaired = st;
            repaired.counts[static_cast<int>(ChannelMode::rep_dut)] -= 1;
            repaired.counts[0] += 1;
            add_rate(from, repaired,
                     st.counts[static_cast<int>(ChannelMode::rep_dut)] * s.mu_dut);
        }
    }

    model.eff.resize(count);
    model.linking.resize(count);
    model.initial.assign(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        const MarkovState& st = model.states[i];
        model.eff[i] = st.ok() < s.m ? 1 : 0;
        MarkovState linked = st;
        linked.counts[static_cast<int>(ChannelMode::rep_dut)] +=
            linked.counts[static_cast<int>(ChannelMode::dut)];
        linked.counts[static_cast<int>(ChannelMode::dut)] = 0;
        model.linking[i] = index.at(linked);
        if (st.ok() == s.n) model.initial[i] = 1.0;
    }
    return model;
}

struct PhaseResult {
    std::vector<double> p_end;
    double integrated_unavailability = 0.0;  // integral of eff . P(t) dt, in hours
    double achieved_tolerance = 0.0;
};

namespace detail {

inline void check_distribution(const std::vector<double>& p, std::size_t expected) {
    if (p.size() != expected)
        throw std::invalid_argument("probability vector size mismatch");
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("probability vector does not sum to 1 (sum=" +
                                    std::to_string(total) + ")");
}

}  // namespace detail

// Transient solution of dP/dt = P Q over one phase by uniformization:
// P(t) = sum_k Poisson(k; Lambda t) p0 M^k with M = I + Q/Lambda. The
// unavailability integral uses the same series
// (integral of the k-th Poisson density over [0,T] is the tail
// probability P[Pois(Lambda T) > k] / Lambda), so no quadrature grid is
// involved. Truncation error is certified: if the tail cannot be pushed
// below `tolerance`, a SolverError reports what was achieved.
inline PhaseResult phase_transient(const MarkovModel& model,
                                   const std::vector<double>& p0, double duration,
                                   double tolerance = 1e-12) {
    const std::size_t n = model.states.size();
    detail::check_distribution(p0, n);
    if (duration < 0.0) throw std::invalid_argument("duration must be >= 0");

    double uniform_rate = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        uniform_rate = std::max(uniform_rate, -model.generator[i * n + i]);

    PhaseResult out;
    auto eff_dot = [&](const std::vector<double>& v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (model.eff[i]) acc += v[i];
        return acc;
    };

    if (uniform_rate == 0.0 || duration == 0.0) {
        out.p_end = p0;
        out.integrated_unavailability = duration * eff_dot(p0);
        out.achieved_tolerance = 0.0;
        return out;
    }

    // M transposed, so each iteration is a cache-friendly row traversal.
    std::vector<double> mt(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            mt[j * n + i] = model.generator[i * n + j] / uniform_rate +
                            (i == j ? 1.0 : 0.0);

    const double a = uniform_rate * duration;
    const std::size_t k_max =
        static_cast<std::size_t>(a + 12.0 * std::sqrt(a) + 60.0);

    std::vector<double> v = p0;
    std::vector<double> next(n);
    std::vector<double> p_end(n, 0.0);
    double integral = 0.0;
    double cumulative = 0.0;
    double certified_tail = 1.0;
    for (std::size_t k = 0;; ++k) {
        const double kd = static_cast<double>(k);
        const double log_w = -a + kd * std::log(a) - std::lgamma(kd + 1.0);
        const double w = std::exp(log_w);
        cumulative += w;
        double tail = std::max(0.0, 1.0 - cumulative);
        if (kd > a) {
            // Past the mode the Poisson tail is geometrically dominated:
            // sum_{j>k} w_j <= w_k * a/(k+1-a). This sidesteps the rounding
            // floor of 1-cumulative and certifies the truncation.
            certified_tail = w * (a / (kd + 1.0 - a));
            tail = std::min(tail, certified_tail);
        }
        for (std::size_t i = 0; i < n; ++i) p_end[i] += w * v[i];
        integral += tail * eff_dot(v);
        if (kd > a && certified_tail <= tolerance * 1e-2) break;
        if (k == k_max)
            throw SolverError("uniformization truncation did not converge: achieved " +
                              std::to_string(certified_tail) + ", requested " +
                              std::to_string(tolerance));
        for (std::size_t j = 0; j < n; ++j) {
            const double* row = &mt[j * n];
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += row[i] * v[i];
            next[j] = acc;
        }
        v.swap(next);
    }

    for (double& p : p_end) {
        if (p < 0.0) {
            if (p < -1e-12) throw SolverError("negative state probability from solver");
            p = 0.0;
        }
    }
    out.p_end = std::move(p_end);
    out.integrated_unavailability = integral / uniform_rate;
    out.achieved_tolerance = certified_tail;
    return out;
}

// Proof-test linking: DUT mass moves to RepDUT, a deterministic 0/1 map.
inline std::vector<double> apply_linking(const MarkovModel& model,
                                         const std::vector<double>& p) {
    detail::check_distribution(p, model.states.size());
    std::vector<double> out(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) out[model.linking[i]] += p[i];
    return out;
}

struct MarkovResult {
    double pfd_avg = 0.0;
    std::vector<double> per_phase_mean_unavailability;
    double achieved_tolerance = 0.0;  // worst phase
};

// Chains t0/t1 identical phases: transient over t1, accumulate the
// unavailability integral, apply the linking matrix, repeat.
inline MarkovResult pfd_avg_markov(const Scenario& s, double tolerance = 1e-12) {
    s.validate();
    const MarkovModel model = build_markov(s);
    const long long phases = s.phases();
    std::vector<double> p = model.initial;
    MarkovResult out;
    out.per_phase_mean_unavailability.reserve(static_cast<std::size_t>(phases));
    double total = 0.0;
    for (long long k = 0; k < phases; ++k) {
        PhaseResult phase = phase_transient(model, p, s.t1, tolerance);
        total += phase.integrated_unavailability;
        out.per_phase_mean_unavailability.push_back(phase.integrated_unavailability / s.t1);
        out.achieved_tolerance = std::max(out.achieved_tolerance, phase.achieved_tolerance);
        p = apply_linking(model, phase.p_end);
    }
    out.pfd_avg = total / s.t0;
    return out;
}

inline void write_state_space_csv(std::ostream& os, const MarkovModel& model) {
    os << "state_index,ok,dd,dut,repdut,duu,eff\n";
    for (std::size_t i = 0; i < model.states.size(); ++i) {
        const auto& c = model.states[i].counts;
        os << i << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << c[3] << ','
           << c[4] << ',' << static_cast<int>(model.eff[i]) << '\n';
    }
}

}  // namespace pfdkit
