#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pfdkit/approx.hpp"
#include "pfdkit/fault_tree.hpp"
#include "pfdkit/markov.hpp"
#include "pfdkit/petri.hpp"
#include "pfdkit/scenario.hpp"

namespace pfdkit {

enum class MethodId { equations, fault_tree, markov, petri };

inline constexpr MethodId kAllMethods[] = {MethodId::fault_tree, MethodId::markov,
                                           MethodId::petri, MethodId::equations};

inline const char* to_string(MethodId m) {
    switch (m) {
        case MethodId::equations: return "equations";
        case MethodId::fault_tree: return "fault_tree";
        case MethodId::markov: return "markov";
        case MethodId::petri: return "petri";
    }
    throw std::invalid_argument("invalid MethodId");
}

inline MethodId method_from_string(const std::string& text) {
    for (MethodId m : kAllMethods)
        if (text == to_string(m)) return m;
    throw std::invalid_argument(
        "unknown method '" + text +
        "' (valid: equations, fault_tree, markov, petri)");
}

struct RunOptions {
    long long histories = 1'000'000;
    std::uint64_t seed = 20203u;  // master seed; petri cells derive their own
    double confidence = 0.90;
    int grid_points_per_interval = 201;
    int markov_max_channels = 8;  // safety valve, configurable
    int threads = 0;
    double markov_tolerance = 1e-12;
};

namespace detail {

inline std::string format_sig3(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", value);
    return buf;
}

inline std::string format_full(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

inline std::string format_short(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

}  // namespace detail

// One (scenario, method) evaluation: the value plus method-specific
// metadata as `key=value` pairs joined with ';'. A failed evaluation
// carries the error text instead.
struct MethodCell {
    bool ok = false;
    double value = 0.0;
    std::string metadata;
    std::string error;
};

inline std::uint64_t seed_for_case(std::uint64_t master, int case_index) {
    return SplitMix64::mix(master + 0x9E3779B97F4A7C15ull *
                                        static_cast<std::uint64_t>(case_index + 1));
}

inline MethodCell run_method(const Scenario& s, MethodId method,
                             const RunOptions& options) {
    MethodCell cell;
    try {
        switch (method) {
            case MethodId::equations: {
                const ApproxResult r = approx_pfd(s);
                const DerivedRates d = derive_rates(s);
                cell.value = r.pfd_avg;
                cell.metadata = std::string("valid_dut=") + (r.valid_dut ? "true" : "false") +
                                ";valid_duu=" + (r.valid_duu ? "true" : "false") +
                                ";lambda_dut_t1=" + detail::format_short(d.lambda_dut * s.t1) +
                                ";lambda_duu_t0=" + detail::format_short(d.lambda_duu * s.t0);
                break;
            }
            case MethodId::fault_tree: {
                const FaultTreeResult r = average_pfd_ft(s, options.grid_points_per_interval);
                cell.value = r.pfd_avg;
                cell.metadata = "grid_points_per_interval=" +
                                std::to_string(r.grid_points_per_interval);
                break;
            }
            case MethodId::markov: {
                if (s.n > options.markov_max_channels)
                    throw SolverError("markov model refused: n=" + std::to_string(s.n) +
                                      " exceeds the configured cap of " +
                                      std::to_string(options.markov_max_channels));
                const MarkovResult r = pfd_avg_markov(s, options.markov_tolerance);
                cell.value = r.pfd_avg;
                cell.metadata = "solver_tol=" + detail::format_short(options.markov_tolerance) +
                                ";achieved_tol=" + detail::format_short(r.achieved_tolerance) +
                                ";phases=" + std::to_string(s.phases());
                break;
            }
            case MethodId::petri: {
                PetriOptions po;
                po.histories = options.histories;
                po.seed = options.seed;
                po.confidence = options.confidence;
                po.threads = options.threads;
                const EstimateWithCI e = estimate_pfd(s, po);
                cell.value = e.mean;
                cell.metadata = "half_width=" + detail::format_short(e.half_width) +
                                ";confidence=" + detail::format_short(e.confidence) +
                                ";histories=" + std::to_string(e.histories) +
                                ";seed=" + std::to_string(e.seed);
                break;
            }
        }
        cell.ok = true;
    } catch (const std::exception& e) {
        cell.ok = false;
        std::string msg = e.what();
        for (char& c : msg)
            if (c == ',' || c == '\n') c = ';';
        cell.error = msg;
    }
    return cell;
}

// Results of all four methods over a set of cases, with deviations
// against the Petri estimate as the reference.
struct ComparisonReport {
    struct Row {
        CaseId case_id = CaseId::i;
        std::array<MethodCell, 4> cells;  // indexed by MethodId order below
    };
    static constexpr MethodId kOrder[4] = {MethodId::fault_tree, MethodId::markov,
                                           MethodId::petri, MethodId::equations};
    std::vector<Row> rows;

    static int slot(MethodId m) {
        for (int i = 0; i < 4; ++i)
            if (kOrder[i] == m) return i;
        throw std::invalid_argument("invalid MethodId");
    }
    const MethodCell& cell(const Row& row, MethodId m) const { return row.cells[slot(m)]; }

    // (value - petri) / petri, percent.
    std::optional<double> deviation_vs_petri(const Row& row, MethodId m) const {
        const MethodCell& petri = cell(row, MethodId::petri);
        const MethodCell& other = cell(row, m);
        if (!petri.ok || !other.ok || petri.value == 0.0) return {};
        return (other.value - petri.value) / petri.value * 100.0;
    }
};

// Runs every method on every built-in case. Markov is generated for all
// architectures (the 2oo3 state space is built automatically); per-cell
// failures are recorded in the cell and the run continues.
inline ComparisonReport table2(const RunOptions& options) {
    ComparisonReport report;
    int case_index = 0;
    for (CaseId id : kAllCases) {
        const Scenario s = builtin_case(id);
        RunOptions per_case = options;  // petri cells own their derived seed
        per_case.seed = seed_for_case(options.seed, case_index);
        ComparisonReport::Row row;
        row.case_id = id;
        for (MethodId m : ComparisonReport::kOrder)
            row.cells[ComparisonReport::slot(m)] =
                run_method(s, m, m == MethodId::petri ? per_case : options);
        report.rows.push_back(std::move(row));
        ++case_index;
    }
    return report;
}

inline void render_report_text(std::ostream& os, const ComparisonReport& report) {
    constexpr int kLabel = 22, kCol = 11;
    os << std::left << std::setw(kLabel) << "PFDavg";
    for (const auto& row : report.rows)
        os << std::setw(kCol) << (std::string("case ") + to_string(row.case_id));
    os << '\n';
    for (MethodId m : ComparisonReport::kOrder) {
        os << std::setw(kLabel) << to_string(m);
        for (const auto& row : report.rows) {
            const MethodCell& cell = report.cell(row, m);
            os << std::setw(kCol) << (cell.ok ? detail::format_sig3(cell.value) : "ERROR");
        }
        os << '\n';
    }
    os << std::setw(kLabel) << "deviation vs petri [%]" << '\n';
    for (MethodId m : {MethodId::fault_tree, MethodId::markov, MethodId::equations}) {
        os << std::setw(kLabel) << to_string(m);
        for (const auto& row : report.rows) {
            const auto dev = report.deviation_vs_petri(row, m);
            if (dev) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%+.1f", *dev);
                os << std::setw(kCol) << buf;
            } else {
                os << std::setw(kCol) << "-";
            }
        }
        os << '\n';
    }
    for (const auto& row : report.rows)
        for (MethodId m : ComparisonReport::kOrder) {
            const MethodCell& cell = report.cell(row, m);
            if (!cell.ok)
                os << "error: case " << to_string(row.case_id) << ' ' << to_string(m)
                   << ": " << cell.error << '\n';
        }
}

inline void write_report_csv(std::ostream& os, const ComparisonReport& report) {
    os << "case,method,value,deviation_vs_petri_pct,metadata,error\n";
    for (const auto& row : report.rows) {
        for (MethodId m : ComparisonReport::kOrder) {
            const MethodCell& cell = report.cell(row, m);
            os << to_string(row.case_id) << ',' << to_string(m) << ',';
            if (cell.ok) os << detail::format_full(cell.value);
            os << ',';
            if (const auto dev = report.deviation_vs_petri(row, m))
                os << detail::format_full(*dev);
            os << ',' << cell.metadata << ',' << cell.error << '\n';
        }
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

}  // namespace detail

// Reads back a report CSV. Values round-trip exactly (they are written
// with 17 significant digits).
inline ComparisonReport parse_report_csv(std::istream& in) {
    ComparisonReport report;
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line) || detail::trim(line) != "case,method,value,deviation_vs_petri_pct,metadata,error")
        throw ParseError(1, "missing report CSV header");
    ++line_no;
    std::map<std::string, std::size_t> row_of;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 6)
            throw ParseError(line_no, "expected 6 fields");
        const CaseId case_id = case_from_string(fields[0]);
        const MethodId method = method_from_string(fields[1]);
        if (!row_of.count(fields[0])) {
            row_of[fields[0]] = report.rows.size();
            ComparisonReport::Row row;
            row.case_id = case_id;
            report.rows.push_back(row);
        }
        MethodCell cell;
        cell.ok = !fields[2].empty();
        if (cell.ok) cell.value = detail::parse_number(fields[2], line_no, "value");
        cell.metadata = fields[4];
        cell.error = fields[5];
        report.rows[row_of[fields[0]]].cells[ComparisonReport::slot(method)] = cell;
    }
    return report;
}

// Scenario writer; parse_scenario() reads this format back bit-exactly.
inline void write_scenario(std::ostream& os, const Scenario& s) {
    os << "[scenario]\n";
    os << "m = " << s.m << '\n';
    os << "n = " << s.n << '\n';
    os << "lambda_d = " << detail::format_full(s.lambda_d) << '\n';
    os << "dc = " << detail::format_full(s.dc) << '\n';
    os << "ptc = " << detail::format_full(s.ptc) << '\n';
    os << "beta_dd = " << detail::format_full(s.beta_dd) << '\n';
    os << "beta_dut = " << detail::format_full(s.beta_dut) << '\n';
    os << "beta_duu = " << detail::format_full(s.beta_duu) << '\n';
    os << "mu_dd = " << detail::format_full(s.mu_dd) << '\n';
    os << "mu_dut = " << detail::format_full(s.mu_dut) << '\n';
    os << "t1 = " << detail::format_full(s.t1) << '\n';
    os << "t0 = " << detail::format_full(s.t0) << '\n';
}

// Unavailability-versus-time export for the two methods that have a
// native time grid.
inline TimeCurve export_timeseries(const Scenario& s, MethodId method,
                                   const RunOptions& options) {
    s.validate();
    if (method == MethodId::fault_tree)
        return average_pfd_ft(s, options.grid_points_per_interval).curve;
    if (method != MethodId::markov)
        throw std::invalid_argument(std::string("no time curve for this method: ") +
                                    to_string(method));

    const MarkovModel model = build_markov(s);
    const int points = options.grid_points_per_interval;
    if (points < 2)
        throw std::invalid_argument("grid_points_per_interval must be at least 2");
    TimeCurve curve;
    auto unavail = [&](const std::vector<double>& p) {
        double acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (model.eff[i]) acc += p[i];
        return acc;
    };
    std::vector<double> p = model.initial;
    curve.samples.push_back({0.0, unavail(p)});
    const double dt = s.t1 / static_cast<double>(points - 1);
    for (long long phase = 0; phase < s.phases(); ++phase) {
        for (int j = 1; j < points; ++j) {
            p = phase_transient(model, p, dt, options.markov_tolerance).p_end;
            const double t = s.t1 * (static_cast<double>(phase) +
                                     static_cast<double>(j) / (points - 1));
            curve.samples.push_back({t, unavail(p)});
        }
        p = apply_linking(model, p);
    }
    return curve;
}

inline void write_timeseries_csv(std::ostream& os, const TimeCurve& curve) {
    os << "t_hours,unavailability\n";
    char buf[64];
    for (const auto& sample : curve.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", sample.t, sample.p);
        os << buf;
    }
}

}  // namespace pfdkit
