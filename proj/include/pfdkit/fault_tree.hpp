#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "pfdkit/laws.hpp"
#include "pfdkit/scenario.hpp"

namespace pfdkit {

enum class GateKind { gate_and, gate_or, gate_vote };

// Static fault tree: a DAG of gates over basic events. Basic events are
// identified by id; adding the same id twice yields the same node, which
// is how repeated (shared) events are expressed.
class FaultTree {
public:
    struct BasicEvent {
        std::string id;
        Law law;
    };
    struct Gate {
        GateKind kind = GateKind::gate_or;
        int k = 1;  // vote threshold; ignored for and/or
        std::vector<int> children;
    };
    using Node = std::variant<BasicEvent, Gate>;

    int add_basic(const std::string& id, const Law& law = Exponential{0.0}) {
        if (auto it = event_index_.find(id); it != event_index_.end()) return it->second;
        nodes_.emplace_back(BasicEvent{id, law});
        const int idx = static_cast<int>(nodes_.size()) - 1;
        event_index_.emplace(id, idx);
        return idx;
    }

    int add_gate(GateKind kind, std::vector<int> children, int k = 0) {
        for (int c : children) check_index(c);
        const int count = static_cast<int>(children.size());
        if (count == 0) throw std::invalid_argument("gate must have children");
        switch (kind) {
            case GateKind::gate_and: k = count; break;
            case GateKind::gate_or: k = 1; break;
            case GateKind::gate_vote:
                if (k < 1 || k > count)
                    throw std::invalid_argument("vote gate needs 1 <= k <= child count");
                break;
        }
        nodes_.emplace_back(Gate{kind, k, std::move(children)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    void set_top(int idx) {
        check_index(idx);
        top_ = idx;
    }

    int top() const {
        if (top_ < 0) throw std::logic_error("fault tree has no top node");
        return top_;
    }

    const Node& node(int idx) const {
        check_index(idx);
        return nodes_[idx];
    }

    std::size_t node_count() const { return nodes_.size(); }

    // Basic-event ids in depth-first first-appearance order from the top
    // gate. This is also the BDD variable order.
    std::vector<std::string> event_ids() const {
        std::vector<std::string> order;
        std::vector<char> seen(nodes_.size(), 0);
        collect_events(top(), seen, order);
        return order;
    }

    const Law& event_law(const std::string& id) const {
        auto it = event_index_.find(id);
        if (it == event_index_.end())
            throw std::invalid_argument("unknown basic event '" + id + "'");
        return std::get<BasicEvent>(nodes_[it->second]).law;
    }

    // Structural checks: top set, acyclic, vote thresholds consistent,
    // every basic event reachable from the top.
    void validate() const {
        std::vector<int> state(nodes_.size(), 0);  // 0 new, 1 open, 2 done
        check_acyclic(top(), state);
        for (const auto& [id, idx] : event_index_)
            if (state[idx] != 2)
                throw std::invalid_argument("basic event '" + id +
                                            "' not reachable from top");
    }

private:
    void check_index(int idx) const {
        if (idx < 0 || idx >= static_cast<int>(nodes_.size()))
            throw std::out_of_range("invalid fault tree node index");
    }

    void check_acyclic(int idx, std::vector<int>& state) const {
        if (state[idx] == 2) return;
        if (state[idx] == 1) throw std::invalid_argument("fault tree contains a cycle");
        state[idx] = 1;
        if (const auto* gate = std::get_if<Gate>(&nodes_[idx]))
            for (int c : gate->children) check_acyclic(c, state);
        state[idx] = 2;
    }

    void collect_events(int idx, std::vector<char>& seen,
                        std::vector<std::string>& order) const {
        if (seen[idx]) return;
        seen[idx] = 1;
        if (const auto* ev = std::get_if<BasicEvent>(&nodes_[idx])) {
            order.push_back(ev->id);
            return;
        }
        for (int c : std::get<Gate>(nodes_[idx]).children)
            collect_events(c, seen, order);
    }

    std::vector<Node> nodes_;
    std::unordered_map<std::string, int> event_index_;
    int top_ = -1;
};

// Reduced ordered BDD of the tree's structure function. Nodes are
// hash-consed; children always precede parents in the node array, so a
// single forward pass evaluates the top-event probability exactly
// (Shannon decomposition), repeated events included.
class TreeBdd {
public:
    explicit TreeBdd(const FaultTree& tree) : events_(tree.event_ids()) {
        tree.validate();
        nodes_.push_back({-1, -1, -1});  // terminal 0
        nodes_.push_back({-1, -1, -1});  // terminal 1
        std::unordered_map<std::string, int> rank;
        for (std::size_t i = 0; i < events_.size(); ++i)
            rank.emplace(events_[i], static_cast<int>(i));
        std::unordered_map<int, int> built;
        root_ = build(tree, tree.top(), rank, built);
    }

    const std::vector<std::string>& events() const { return events_; }
    std::size_t node_count() const { return nodes_.size(); }

    // q[i] is the probability of events()[i].
    double probability(const std::vector<double>& q) const {
        if (q.size() != events_.size())
            throw std::invalid_argument("probability vector size mismatch");
        for (double p : q)
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument("event probability outside [0,1]");
        std::vector<double> value(nodes_.size());
        value[0] = 0.0;
        value[1] = 1.0;
        for (std::size_t i = 2; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            value[i] = (1.0 - q[n.var]) * value[n.lo] + q[n.var] * value[n.hi];
        }
        return root_ <= 1 ? static_cast<double>(root_) : value[root_];
    }

    // All minimal cut sets, as sets of event ids. Positive parts of the
    // paths to the 1-terminal cover every minimal cut of a monotone
    // structure function; subset filtering then removes the non-minimal
    // ones. Limited to 64 events (cut sets are held as bit masks).
    std::vector<std::vector<std::string>> minimal_cut_sets() const {
        if (events_.size() > 64)
            throw std::invalid_argument("minimal_cut_sets supports at most 64 events");
        std::set<std::uint64_t> candidates;
        walk_paths(root_, 0, candidates);
        std::vector<std::uint64_t> masks(candidates.begin(), candidates.end());
        std::sort(masks.begin(), masks.end(), [](std::uint64_t a, std::uint64_t b) {
            const int pa = std::popcount(a), pb = std::popcount(b);
            return pa != pb ? pa < pb : a < b;
        });
        std::vector<std::uint64_t> minimal;
        for (std::uint64_t m : masks) {
            bool covered = false;
            for (std::uint64_t keep : minimal)
                if ((keep & m) == keep) { covered = true; break; }
            if (!covered) minimal.push_back(m);
        }
        std::vector<std::vector<std::string>> out;
        out.reserve(minimal.size());
        for (std::uint64_t m : minimal) {
            std::vector<std::string> cut;
            for (std::size_t i = 0; i < events_.size(); ++i)
                if (m & (std::uint64_t{1} << i)) cut.push_back(events_[i]);
            out.push_back(std::move(cut));
        }
        return out;
    }

private:
    struct Node {
        int var, lo, hi;
    };

    int make(int var, int lo, int hi) {
        if (lo == hi) return lo;
        const std::uint64_t key = (static_cast<std::uint64_t>(var) << 48) |
                                  (static_cast<std::uint64_t>(lo) << 24) |
                                  static_cast<std::uint64_t>(hi);
        if (auto it = unique_.find(key); it != unique_.end()) return it->second;
        nodes_.push_back({var, lo, hi});
        const int idx = static_cast<int>(nodes_.size()) - 1;
        unique_.emplace(key, idx);
        return idx;
    }

    int var_of(int node) const { return node <= 1 ? kTerminalRank : nodes_[node].var; }

    int apply(bool conjunction, int a, int b) {
        if (a > b) std::swap(a, b);
        if (conjunction) {
            if (a == 0) return 0;
            if (a == 1) return b;
            if (a == b) return a;
        } else {
            if (a == 1) return 1;
            if (a == 0) return b;
            if (a == b) return a;
        }
        const std::uint64_t key = (static_cast<std::uint64_t>(conjunction) << 63) |
                                  (static_cast<std::uint64_t>(a) << 31) |
                                  static_cast<std::uint64_t>(b);
        if (auto it = apply_cache_.find(key); it != apply_cache_.end()) return it->second;
        const int va = var_of(a), vb = var_of(b);
        const int v = std::min(va, vb);
        const int a_lo = va == v ? nodes_[a].lo : a;
        const int a_hi = va == v ? nodes_[a].hi : a;
        const int b_lo = vb == v ? nodes_[b].lo : b;
        const int b_hi = vb == v ? nodes_[b].hi : b;
        const int result = make(v, apply(conjunction, a_lo, b_lo),
                                apply(conjunction, a_hi, b_hi));
        apply_cache_.emplace(key, result);
        return result;
    }

    int bdd_and(int a, int b) { return apply(true, a, b); }
    int bdd_or(int a, int b) { return apply(false, a, b); }

    // at-least-k over monotone child functions:
    //   V(i, need) = (f_i AND V(i+1, need-1)) OR V(i+1, need)
    int vote(const std::vector<int>& child, std::size_t i, int need,
             std::map<std::pair<std::size_t, int>, int>& memo) {
        if (need <= 0) return 1;
        if (child.size() - i < static_cast<std::size_t>(need)) return 0;
        const auto key = std::make_pair(i, need);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        const int with = bdd_and(child[i], vote(child, i + 1, need - 1, memo));
        const int without = vote(child, i + 1, need, memo);
        const int result = bdd_or(with, without);
        memo.emplace(key, result);
        return result;
    }

    int build(const FaultTree& tree, int idx,
              const std::unordered_map<std::string, int>& rank,
              std::unordered_map<int, int>& built) {
        if (auto it = built.find(idx); it != built.end()) return it->second;
        int result;
        if (const auto* ev = std::get_if<FaultTree::BasicEvent>(&tree.node(idx))) {
            result = make(rank.at(ev->id), 0, 1);
        } else {
            const auto& gate = std::get<FaultTree::Gate>(tree.node(idx));
            std::vector<int> child;
            child.reserve(gate.children.size());
            for (int c : gate.children) child.push_back(build(tree, c, rank, built));
            std::map<std::pair<std::size_t, int>, int> memo;
            result = vote(child, 0, gate.k, memo);
        }
        built.emplace(idx, result);
        return result;
    }

    void walk_paths(int node, std::uint64_t positives,
                    std::set<std::uint64_t>& out) const {
        if (node == 0) return;
        if (node == 1) {
            out.insert(positives);
            return;
        }
        const Node& n = nodes_[node];
        walk_paths(n.lo, positives, out);
        walk_paths(n.hi, positives | (std::uint64_t{1} << n.var), out);
    }

    static constexpr int kTerminalRank = 1 << 20;

    std::vector<Node> nodes_;
    std::unordered_map<std::uint64_t, int> unique_;
    std::unordered_map<std::uint64_t, int> apply_cache_;
    std::vector<std::string> events_;
    int root_ = 0;
};

// Exact top-event probability given per-event probabilities.
inline double top_probability(const FaultTree& tree,
                              const std::map<std::string, double>& q) {
    TreeBdd bdd(tree);
    std::vector<double> by_rank;
    by_rank.reserve(bdd.events().size());
    for (const auto& id : bdd.events()) {
        auto it = q.find(id);
        if (it == q.end())
            throw std::invalid_argument("no probability for basic event '" + id + "'");
        by_rank.push_back(it->second);
    }
    return bdd.probability(by_rank);
}

inline std::vector<std::vector<std::string>> minimal_cut_sets(const FaultTree& tree) {
    return TreeBdd(tree).minimal_cut_sets();
}

// Case-study tree: Vote(n-m+1) over one or-gate per channel; each
// channel combines its three independent failure events with the three
// common-cause events shared by all channels. CCF repair rates carry the
// factor n (any one channel repair clears the common event). A single
// channel keeps the full per-mode rates and no CCF events.
inline FaultTree build_case_tree(const Scenario& s) {
    const DerivedRates r = derive_rates(s);
    FaultTree tree;
    std::vector<int> ccf;
    if (s.n > 1) {
        ccf.push_back(tree.add_basic(
            "ccf_dd", Glm{0.0, r.lambda_dd_ccf, static_cast<double>(s.n) * s.mu_dd}));
        ccf.push_back(tree.add_basic(
            "ccf_dut", PeriodicTest{r.lambda_dut_ccf, static_cast<double>(s.n) * s.mu_dut,
                                    s.t1, s.t1}));
        ccf.push_back(tree.add_basic("ccf_duu", Exponential{r.lambda_duu_ccf}));
    }
    std::vector<int> channel_gates;
    for (int c = 1; c <= s.n; ++c) {
        const std::string prefix = "ch" + std::to_string(c) + "_";
        const double dd = s.n > 1 ? r.lambda_dd_ind : r.lambda_dd;
        const double dut = s.n > 1 ? r.lambda_dut_ind : r.lambda_dut;
        const double duu = s.n > 1 ? r.lambda_duu_ind : r.lambda_duu;
        std::vector<int> children = {
            tree.add_basic(prefix + "dd", Glm{0.0, dd, s.mu_dd}),
            tree.add_basic(prefix + "dut", PeriodicTest{dut, s.mu_dut, s.t1, s.t1}),
            tree.add_basic(prefix + "duu", Exponential{duu}),
        };
        children.insert(children.end(), ccf.begin(), ccf.end());
        channel_gates.push_back(tree.add_gate(GateKind::gate_or, std::move(children)));
    }
    tree.set_top(tree.add_gate(GateKind::gate_vote, std::move(channel_gates),
                               s.n - s.m + 1));
    return tree;
}

// Top-event probability samples over [0, t0] on a grid aligned to the
// proof-test instants.
struct TimeCurve {
    struct Sample {
        double t = 0.0;
        double p = 0.0;
    };
    std::vector<Sample> samples;
};

inline void write_time_curve_csv(std::ostream& os, const TimeCurve& curve) {
    os << "t_hours,p_top\n";
    char buf[64];
    for (const auto& s : curve.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.t, s.p);
        os << buf;
    }
}

struct FaultTreeResult {
    double pfd_avg = 0.0;
    TimeCurve curve;
    int grid_points_per_interval = 0;
};

// Time-dependent evaluation bound to one tree: laws are resolved once,
// the BDD is reused across time points, and periodic-test states are
// cached per event.
class FaultTreeEvaluator {
public:
    explicit FaultTreeEvaluator(const FaultTree& tree) : bdd_(tree) {
        for (const auto& id : bdd_.events()) {
            const Law& law = tree.event_law(id);
            if (const auto* pt = std::get_if<PeriodicTest>(&law))
                periodic_.emplace_back(*pt);
            laws_.push_back(law);
            periodic_index_.push_back(
                std::holds_alternative<PeriodicTest>(law)
                    ? static_cast<int>(periodic_.size()) - 1
                    : -1);
        }
        q_.resize(laws_.size());
    }

    double p_top(double t) const {
        for (std::size_t i = 0; i < laws_.size(); ++i) {
            q_[i] = periodic_index_[i] >= 0
                        ? periodic_[periodic_index_[i]](t)
                        : unavailability(laws_[i], t);
        }
        return bdd_.probability(q_);
    }

private:
    TreeBdd bdd_;
    std::vector<Law> laws_;
    std::vector<PeriodicTestCurve> periodic_;
    std::vector<int> periodic_index_;
    mutable std::vector<double> q_;
};

// Mean unavailability over [0, t0] by composite Simpson quadrature per
// proof-test interval. The integrand is smooth inside intervals and
// kinked at their boundaries, so the grid is anchored at 0, t1, 2*t1, ...
// grid_points_per_interval must be odd (Simpson needs an even number of
// subintervals); summation order is fixed for bit-stable results.
inline FaultTreeResult average_pfd_ft(const Scenario& s,
                                      int grid_points_per_interval = 201) {
    s.validate();
    if (grid_points_per_interval < 3 || grid_points_per_interval % 2 == 0)
        throw std::invalid_argument(
            "grid_points_per_interval must be odd and at least 3");
    const FaultTree tree = build_case_tree(s);
    const FaultTreeEvaluator eval(tree);
    const long long phases = s.phases();
    const int points = grid_points_per_interval;
    const double h = s.t1 / static_cast<double>(points - 1);

    FaultTreeResult out;
    out.grid_points_per_interval = points;
    out.curve.samples.reserve(static_cast<std::size_t>(phases) * (points - 1) + 1);
    double integral = 0.0;
    double last_value = 0.0;
    for (long long k = 0; k < phases; ++k) {
        double interval_sum = 0.0;
        for (int j = 0; j < points; ++j) {
            const double t = s.t1 * (static_cast<double>(k) +
                                     static_cast<double>(j) / (points - 1));
            const double p = (j == 0 && k > 0) ? last_value : eval.p_top(t);
            if (j > 0 || k == 0) out.curve.samples.push_back({t, p});
            const double weight = (j == 0 || j == points - 1) ? 1.0
                                  : (j % 2 == 1)              ? 4.0
                                                              : 2.0;
            interval_sum += weight * p;
            if (j == points - 1) last_value = p;
        }
        integral += interval_sum * h / 3.0;
    }
    out.pfd_avg = integral / s.t0;
    return out;
}

}  // namespace pfdkit
