#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "pfdkit/scenario.hpp"

namespace pfdkit {

// Counter-style generator: consecutive outputs of the splitmix64 finalizer.
// Deterministic everywhere, trivially seedable per history.
struct SplitMix64 {
    std::uint64_t state = 0;

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double uniform01() {  // in [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

    static SplitMix64 for_history(std::uint64_t seed, std::uint64_t index) {
        return SplitMix64{mix(seed + 0x9E3779B97F4A7C15ull * (index + 1))};
    }
};

enum class PetriLawKind { exp, dirac, ipa };

struct TransitionLaw {
    PetriLawKind kind = PetriLawKind::exp;
    double parameter = 0.0;  // rate / delay / period

    static TransitionLaw exponential(double rate) { return {PetriLawKind::exp, rate}; }
    static TransitionLaw dirac(double delay) { return {PetriLawKind::dirac, delay}; }
    static TransitionLaw in_advance(double period) { return {PetriLawKind::ipa, period}; }
};

enum class CmpOp { eq, ne, lt, le, gt, ge };

// Guard atom: variable <op> constant. A guard is a conjunction of atoms.
struct Condition {
    int var = 0;
    CmpOp op = CmpOp::eq;
    long long value = 0;
};

enum class AssignOp { set, add };

struct Assignment {
    int var = 0;
    AssignOp op = AssignOp::set;
    long long value = 0;
};

struct Arc {
    int place = 0;
    int weight = 1;
};

struct PetriTransition {
    std::string id;
    TransitionLaw law;
    std::vector<Arc> inputs;
    std::vector<Arc> outputs;
    std::vector<Condition> guard;       // empty = always true
    std::vector<Assignment> affectation;  // applied after token movement
};

struct PetriPlace {
    std::string id;
    int initial_marking = 0;
};

struct PetriVariable {
    std::string name;
    long long initial = 0;
};

// Net with predicates. Declaration order of transitions is the
// tie-break order for simultaneous firings. The *_invariant members are
// optional self-check metadata evaluated by the engine in checked runs.
struct PetriNet {
    std::vector<PetriPlace> places;
    std::vector<PetriTransition> transitions;
    std::vector<PetriVariable> variables;

    struct TokenInvariant {
        std::vector<int> places;
        int total = 0;
    };
    struct VarTokenInvariant {
        int var = 0;
        std::vector<int> places;  // variable must equal the token sum here
    };
    std::vector<TokenInvariant> token_invariants;
    std::vector<VarTokenInvariant> var_token_invariants;

    int add_place(const std::string& id, int marking = 0) {
        places.push_back({id, marking});
        return static_cast<int>(places.size()) - 1;
    }
    int add_variable(const std::string& name, long long initial) {
        variables.push_back({name, initial});
        return static_cast<int>(variables.size()) - 1;
    }
    int add_transition(PetriTransition t) {
        for (const Arc& a : t.inputs) check_place(a.place);
        for (const Arc& a : t.outputs) check_place(a.place);
        if (t.law.kind == PetriLawKind::exp && !(t.law.parameter > 0.0))
            throw std::invalid_argument("exp transition needs rate > 0: " + t.id);
        if (t.law.kind == PetriLawKind::dirac && t.law.parameter < 0.0)
            throw std::invalid_argument("dirac transition needs delay >= 0: " + t.id);
        if (t.law.kind == PetriLawKind::ipa && !(t.law.parameter > 0.0))
            throw std::invalid_argument("ipa transition needs period > 0: " + t.id);
        transitions.push_back(std::move(t));
        return static_cast<int>(transitions.size()) - 1;
    }

    int place_index(const std::string& id) const {
        for (std::size_t i = 0; i < places.size(); ++i)
            if (places[i].id == id) return static_cast<int>(i);
        throw std::invalid_argument("unknown place '" + id + "'");
    }
    int variable_index(const std::string& name) const {
        for (std::size_t i = 0; i < variables.size(); ++i)
            if (variables[i].name == name) return static_cast<int>(i);
        throw std::invalid_argument("unknown variable '" + name + "'");
    }

private:
    void check_place(int idx) const {
        if (idx < 0 || idx >= static_cast<int>(places.size()))
            throw std::out_of_range("arc references unknown place");
    }
};

namespace detail {

inline bool holds(CmpOp op, long long lhs, long long rhs) {
    switch (op) {
        case CmpOp::eq: return lhs == rhs;
        case CmpOp::ne: return lhs != rhs;
        case CmpOp::lt: return lhs < rhs;
        case CmpOp::le: return lhs <= rhs;
        case CmpOp::gt: return lhs > rhs;
        case CmpOp::ge: return lhs >= rhs;
    }
    return false;
}

}  // namespace detail

// Discrete-event interpreter for one net. All state lives here, so one
// engine per thread simulates histories of the shared immutable net.
//
// Scheduling semantics: exponential delays are sampled fresh at each
// (re)enabling; Dirac(0) transitions fire before any timed event at the
// same instant, in declaration order; ipa transitions fire at every
// multiple of their period at which they are enabled.
class PetriEngine {
public:
    explicit PetriEngine(const PetriNet& net, bool check_invariants = false)
        : net_(&net),
          check_(check_invariants),
          marking_(net.places.size()),
          vars_(net.variables.size()),
          enabled_(net.transitions.size()),
          sched_(net.transitions.size()) {}

    void reset(SplitMix64 rng) {
        rng_ = rng;
        time_ = 0.0;
        for (std::size_t i = 0; i < marking_.size(); ++i)
            marking_[i] = net_->places[i].initial_marking;
        for (std::size_t i = 0; i < vars_.size(); ++i)
            vars_[i] = net_->variables[i].initial;
        for (std::size_t i = 0; i < enabled_.size(); ++i) {
            enabled_[i] = compute_enabled(static_cast<int>(i));
            sched_[i] = enabled_[i] && !is_immediate(static_cast<int>(i))
                            ? schedule(static_cast<int>(i), time_)
                            : kNever;
        }
        check_state();
        immediate_cascade();
    }

    double now() const { return time_; }
    int marking(int place) const { return marking_[place]; }
    long long variable(int var) const { return vars_[var]; }
    bool enabled(int transition) const { return enabled_[transition]; }

    // Firing time for a transition enabled at `now` (the sampling step of
    // the event loop, exposed for tests).
    double schedule(int transition, double now) {
        const TransitionLaw& law = net_->transitions[transition].law;
        switch (law.kind) {
            case PetriLawKind::exp: return now + rng_.exponential(law.parameter);
            case PetriLawKind::dirac: return now + law.parameter;
            case PetriLawKind::ipa: {
                const double k = std::ceil(now / law.parameter);
                const double t = k * law.parameter;
                return t < now ? (k + 1.0) * law.parameter : t;
            }
        }
        return kNever;
    }

    // Token movement, then affectations. Firing a disabled transition is
    // an engine bug, never a model property.
    void fire(int transition) {
        if (!enabled_[transition])
            throw std::logic_error("fired disabled transition '" +
                                   net_->transitions[transition].id + "'");
        const PetriTransition& t = net_->transitions[transition];
        for (const Arc& a : t.inputs) marking_[a.place] -= a.weight;
        for (const Arc& a : t.outputs) marking_[a.place] += a.weight;
        for (const Assignment& as : t.affectation) {
            if (as.op == AssignOp::set)
                vars_[as.var] = as.value;
            else
                vars_[as.var] += as.value;
        }
        after_fire(transition);
        check_state();
    }

    // Runs the net from 0 to t_end; returns the fraction of time during
    // which `var < threshold` held.
    double run_fraction_below(int var, long long threshold, double t_end) {
        reset(rng_);
        double below_time = 0.0;
        while (true) {
            double t_next = kNever;
            int who = -1;
            for (std::size_t i = 0; i < sched_.size(); ++i) {
                if (sched_[i] < t_next) {
                    t_next = sched_[i];
                    who = static_cast<int>(i);
                }
            }
            if (t_next < time_)
                throw std::logic_error("event queue corruption: time went backwards");
            if (who < 0 || t_next >= t_end) {
                if (vars_[var] < threshold) below_time += t_end - time_;
                time_ = t_end;
                break;
            }
            if (vars_[var] < threshold) below_time += t_next - time_;
            time_ = t_next;
            fire(who);
            immediate_cascade();
        }
        return below_time / t_end;
    }

    void seed(SplitMix64 rng) { rng_ = rng; }

private:
    static constexpr double kNever = std::numeric_limits<double>::infinity();

    bool is_immediate(int transition) const {
        const TransitionLaw& law = net_->transitions[transition].law;
        return law.kind == PetriLawKind::dirac && law.parameter == 0.0;
    }

    bool compute_enabled(int transition) const {
        const PetriTransition& t = net_->transitions[transition];
        for (const Arc& a : t.inputs)
            if (marking_[a.place] < a.weight) return false;
        for (const Condition& c : t.guard)
            if (!detail::holds(c.op, vars_[c.var], c.value)) return false;
        return true;
    }

    // Re-derives the enabled set after a firing. Transitions that stayed
    // enabled keep their scheduled time; the fired transition, if enabled
    // again, is treated as freshly enabled.
    void after_fire(int fired) {
        for (std::size_t i = 0; i < enabled_.size(); ++i) {
            const bool was = enabled_[i];
            const bool now_enabled = compute_enabled(static_cast<int>(i));
            enabled_[i] = now_enabled;
            if (is_immediate(static_cast<int>(i))) continue;  // cascade handles these
            if (now_enabled && (!was || static_cast<int>(i) == fired))
                sched_[i] = schedule(static_cast<int>(i), time_);
            else if (!now_enabled)
                sched_[i] = kNever;
        }
    }

    void immediate_cascade() {
        const std::size_t cap =
            64 + 16 * net_->transitions.size() + 4 * net_->places.size();
        std::size_t fired = 0;
        bool progressed = true;
        while (progressed) {
            progressed = false;
            for (std::size_t i = 0; i < enabled_.size(); ++i) {
                if (enabled_[i] && is_immediate(static_cast<int>(i))) {
                    fire(static_cast<int>(i));
                    if (++fired > cap)
                        throw std::logic_error(
                            "immediate-transition livelock (cascade did not settle)");
                    progressed = true;
                    break;  // restart scan: declaration order priority
                }
            }
        }
    }

    void check_state() const {
        if (!check_) return;
        for (int m : marking_)
            if (m < 0) throw std::logic_error("negative marking");
        for (const auto& inv : net_->token_invariants) {
            int total = 0;
            for (int p : inv.places) total += marking_[p];
            if (total != inv.total)
                throw std::logic_error("token conservation violated");
        }
        for (const auto& inv : net_->var_token_invariants) {
            long long total = 0;
            for (int p : inv.places) total += marking_[p];
            if (vars_[inv.var] != total)
                throw std::logic_error("variable out of sync with token count");
        }
    }

    const PetriNet* net_;
    bool check_;
    std::vector<int> marking_;
    std::vector<long long> vars_;
    std::vector<std::uint8_t> enabled_;
    std::vector<double> sched_;
    double time_ = 0.0;
    SplitMix64 rng_;
};

// Case-study net. Per channel: five mode places with one token cycling
// between them (exp failures out of OK, exp repairs back, ipa proof test
// moving DUT to RepDUT). Per failure mode, a two-place CCF cycle: an exp
// transition guarded by nbOK > 0 raises the mode's flag, Dirac(0)
// transitions move every operating channel to the failed mode, and a
// Dirac(0) reset guarded by nbOK == 0 clears the flag. nbOK tracks the
// number of tokens in the OK places.
inline PetriNet build_case_net(const Scenario& s) {
    s.validate();
    const DerivedRates r = derive_rates(s);
    PetriNet net;
    const int nb_ok = net.add_variable("nbOK", s.n);

    struct ModeSpec {
        const char* name;
        double lambda_ind;
        double lambda_ccf;
    };
    const ModeSpec specs[] = {
        {"DD", s.n > 1 ? r.lambda_dd_ind : r.lambda_dd, r.lambda_dd_ccf},
        {"DUT", s.n > 1 ? r.lambda_dut_ind : r.lambda_dut, r.lambda_dut_ccf},
        {"DUU", s.n > 1 ? r.lambda_duu_ind : r.lambda_duu, r.lambda_duu_ccf},
    };

    std::vector<int> ok(s.n), dd(s.n), dut(s.n), rep(s.n), duu(s.n);
    for (int c = 0; c < s.n; ++c) {
        const std::string prefix = "C" + std::to_string(c + 1) + "_";
        ok[c] = net.add_place(prefix + "OK", 1);
        dd[c] = net.add_place(prefix + "DD");
        dut[c] = net.add_place(prefix + "DUT");
        rep[c] = net.add_place(prefix + "RepDUT");
        duu[c] = net.add_place(prefix + "DUU");
    }
    for (int c = 0; c < s.n; ++c) {
        const std::string prefix = "C" + std::to_string(c + 1) + "_";
        const int mode_place[] = {dd[c], dut[c], duu[c]};
        for (int x = 0; x < 3; ++x) {
            if (specs[x].lambda_ind > 0.0) {
                net.add_transition({prefix + std::string(specs[x].name) + "_fail",
                                    TransitionLaw::exponential(specs[x].lambda_ind),
                                    {{ok[c], 1}},
                                    {{mode_place[x], 1}},
                                    {},
                                    {{nb_ok, AssignOp::add, -1}}});
            }
        }
        if (s.mu_dd > 0.0) {
            net.add_transition({prefix + "DD_repair", TransitionLaw::exponential(s.mu_dd),
                                {{dd[c], 1}},
                                {{ok[c], 1}},
                                {},
                                {{nb_ok, AssignOp::add, 1}}});
        }
        net.add_transition({prefix + "proof_test", TransitionLaw::in_advance(s.t1),
                            {{dut[c], 1}},
                            {{rep[c], 1}},
                            {},
                            {}});
        if (s.mu_dut > 0.0) {
            net.add_transition({prefix + "DUT_repair",
                                TransitionLaw::exponential(s.mu_dut),
                                {{rep[c], 1}},
                                {{ok[c], 1}},
                                {},
                                {{nb_ok, AssignOp::add, 1}}});
        }
    }

    if (s.n > 1) {
        for (int x = 0; x < 3; ++x) {
            const std::string mode = specs[x].name;
            const int flag = net.add_variable("CCF_" + mode, 0);
            const int idle = net.add_place("CCF_" + mode + "_idle", 1);
            const int active = net.add_place("CCF_" + mode + "_active");
            if (specs[x].lambda_ccf > 0.0) {
                net.add_transition({"CCF_" + mode + "_occur",
                                    TransitionLaw::exponential(specs[x].lambda_ccf),
                                    {{idle, 1}},
                                    {{active, 1}},
                                    {{nb_ok, CmpOp::gt, 0}},
                                    {{flag, AssignOp::set, 1}}});
            }
            for (int c = 0; c < s.n; ++c) {
                const int target = x == 0 ? dd[c] : x == 1 ? dut[c] : duu[c];
                net.add_transition({"CCF_" + mode + "_hit_C" + std::to_string(c + 1),
                                    TransitionLaw::dirac(0.0),
                                    {{ok[c], 1}},
                                    {{target, 1}},
                                    {{flag, CmpOp::eq, 1}},
                                    {{nb_ok, AssignOp::add, -1}}});
            }
            net.add_transition({"CCF_" + mode + "_reset", TransitionLaw::dirac(0.0),
                                {{active, 1}},
                                {{idle, 1}},
                                {{nb_ok, CmpOp::eq, 0}},
                                {{flag, AssignOp::set, 0}}});
            net.token_invariants.push_back({{idle, active}, 1});
        }
    }

    for (int c = 0; c < s.n; ++c)
        net.token_invariants.push_back({{ok[c], dd[c], dut[c], rep[c], duu[c]}, 1});
    net.var_token_invariants.push_back({nb_ok, ok});
    return net;
}

// One Monte Carlo history: fraction of [0, t0] with fewer than m
// channels operating.
inline double simulate_history(const PetriNet& net, const Scenario& s, SplitMix64 rng,
                               bool check_invariants = false) {
    PetriEngine engine(net, check_invariants);
    engine.seed(rng);
    return engine.run_fraction_below(net.variable_index("nbOK"), s.m, s.t0);
}

struct EstimateWithCI {
    double mean = 0.0;
    double half_width = 0.0;
    double confidence = 0.90;
    long long histories = 0;
    std::uint64_t seed = 0;
};

struct PetriOptions {
    long long histories = 1'000'000;
    std::uint64_t seed = 0;
    double confidence = 0.90;
    int threads = 0;               // 0 = hardware concurrency
    bool check_invariants = false;
    std::vector<double>* per_history = nullptr;  // optional dump target
};

// Plain Monte Carlo with a normal-approximation confidence interval.
// Each history owns an RNG stream derived from (seed, index), and the
// reduction runs over fixed-size chunks in index order, so the estimate
// is bit-identical for any thread count.
inline EstimateWithCI estimate_pfd(const Scenario& s, const PetriOptions& options) {
    s.validate();
    if (options.histories < 100)
        throw std::invalid_argument("estimate_pfd needs at least 100 histories");
    if (!(options.confidence > 0.0 && options.confidence < 1.0))
        throw std::invalid_argument("confidence must lie in (0,1)");

    const PetriNet net = build_case_net(s);
    const int nb_ok = net.variable_index("nbOK");
    const long long histories = options.histories;
    constexpr long long kChunk = 4096;
    const long long chunks = (histories + kChunk - 1) / kChunk;
    std::vector<double> chunk_sum(static_cast<std::size_t>(chunks), 0.0);
    std::vector<double> chunk_sumsq(static_cast<std::size_t>(chunks), 0.0);
    if (options.per_history)
        options.per_history->assign(static_cast<std::size_t>(histories), 0.0);

    std::atomic<long long> next_chunk{0};
    auto worker = [&]() {
        PetriEngine engine(net, options.check_invariants);
        while (true) {
            const long long c = next_chunk.fetch_add(1);
            if (c >= chunks) break;
            const long long begin = c * kChunk;
            const long long end = std::min(histories, begin + kChunk);
            double sum = 0.0, sumsq = 0.0;
            for (long long idx = begin; idx < end; ++idx) {
                engine.seed(SplitMix64::for_history(options.seed,
                                                    static_cast<std::uint64_t>(idx)));
                const double f = engine.run_fraction_below(nb_ok, s.m, s.t0);
                sum += f;
                sumsq += f * f;
                if (options.per_history)
                    (*options.per_history)[static_cast<std::size_t>(idx)] = f;
            }
            chunk_sum[static_cast<std::size_t>(c)] = sum;
            chunk_sumsq[static_cast<std::size_t>(c)] = sumsq;
        }
    };

    long long threads = options.threads > 0
                            ? options.threads
                            : static_cast<long long>(std::thread::hardware_concurrency());
    threads = std::max<long long>(1, std::min<long long>(threads, chunks));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    double sum = 0.0, sumsq = 0.0;
    for (long long c = 0; c < chunks; ++c) {
        sum += chunk_sum[static_cast<std::size_t>(c)];
        sumsq += chunk_sumsq[static_cast<std::size_t>(c)];
    }

    EstimateWithCI out;
    out.histories = histories;
    out.seed = options.seed;
    out.confidence = options.confidence;
    out.mean = sum / static_cast<double>(histories);
    const double variance =
        std::max(0.0, (sumsq - static_cast<double>(histories) * out.mean * out.mean) /
                          (static_cast<double>(histories) - 1.0));
    const double z = std::sqrt(2.0) * boost::math::erfc_inv(1.0 - options.confidence);
    out.half_width = z * std::sqrt(variance / static_cast<double>(histories));
    return out;
}

inline EstimateWithCI estimate_pfd(const Scenario& s, long long histories,
                                   std::uint64_t seed, double confidence = 0.90) {
    PetriOptions options;
    options.histories = histories;
    options.seed = seed;
    options.confidence = confidence;
    return estimate_pfd(s, options);
}

inline void write_history_dump_csv(std::ostream& os,
                                   const std::vector<double>& fractions) {
    os << "history_index,fraction_failed\n";
    char buf[48];
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, fractions[i]);
        os << buf;
    }
}

}  // namespace pfdkit
