// Command-line front end: single-method runs, the full six-case
// comparison table, and unavailability-curve export.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pfdkit/pfdkit.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;   // parse / validation problems
constexpr int kExitSolver = 3;  // solver or filesystem failures

pfdkit::Scenario load_scenario(const std::string& case_name,
                               const std::string& scenario_path) {
    if (!case_name.empty()) return pfdkit::builtin_case(pfdkit::case_from_string(case_name));
    std::ifstream in(scenario_path);
    if (!in)
        throw pfdkit::ParseError(0, "cannot open scenario file '" + scenario_path + "'");
    return pfdkit::parse_scenario(in);
}

std::string scenario_label(const std::string& case_name, const std::string& path) {
    return !case_name.empty() ? "case " + case_name : path;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw pfdkit::SolverError("cannot open output file '" + path + "'");
    return out;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
    } else {
        auto out = open_output(out_path);
        out << content;
        if (!out) throw pfdkit::SolverError("write failed for '" + out_path + "'");
    }
}

void print_run_cell(std::ostream& os, const std::string& label,
                    pfdkit::MethodId method, const pfdkit::MethodCell& cell) {
    os << label << "  method=" << pfdkit::to_string(method);
    if (cell.ok) {
        os << "  pfd_avg=" << pfdkit::detail::format_sig3(cell.value);
        if (!cell.metadata.empty()) os << "  " << cell.metadata;
        os << '\n';
    } else {
        os << "  error: " << cell.error << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PFDavg of M-out-of-N safety architectures by four methods"};
    app.require_subcommand(1);

    std::string case_name, scenario_path, method_name = "all", format = "text", out_path;
    pfdkit::RunOptions options;

    auto add_scenario_flags = [&](CLI::App* cmd) {
        auto* c = cmd->add_option("--case", case_name, "built-in case id (i..vi)");
        auto* f = cmd->add_option("--scenario", scenario_path, "scenario file path");
        c->excludes(f);
        f->excludes(c);
    };
    auto add_common_flags = [&](CLI::App* cmd) {
        cmd->add_option("--histories", options.histories, "Monte Carlo histories")
            ->capture_default_str();
        cmd->add_option("--seed", options.seed, "master RNG seed")->capture_default_str();
        cmd->add_option("--confidence", options.confidence, "CI confidence level")
            ->capture_default_str();
        cmd->add_option("--grid-points-per-interval", options.grid_points_per_interval,
                        "quadrature / export grid density")
            ->capture_default_str();
        cmd->add_option("--out", out_path, "write output to this file");
        cmd->add_option("--format", format, "text or csv")
            ->check(CLI::IsMember({"text", "csv"}))
            ->capture_default_str();
    };

    auto* run = app.add_subcommand("run", "evaluate one scenario");
    add_scenario_flags(run);
    run->add_option("--method", method_name,
                    "equations, fault_tree, markov, petri, or all")
        ->capture_default_str();
    add_common_flags(run);

    auto* table = app.add_subcommand("table2", "all four methods on the six cases");
    add_common_flags(table);

    auto* exp = app.add_subcommand("export", "unavailability curve as CSV");
    add_scenario_flags(exp);
    exp->add_option("--method", method_name, "fault_tree or markov");
    add_common_flags(exp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) {
            if (case_name.empty() && scenario_path.empty())
                throw std::invalid_argument("run needs --case or --scenario");
            const pfdkit::Scenario s = load_scenario(case_name, scenario_path);
            const std::string label = scenario_label(case_name, scenario_path);
            std::vector<pfdkit::MethodId> methods;
            if (method_name == "all")
                methods.assign(std::begin(pfdkit::kAllMethods), std::end(pfdkit::kAllMethods));
            else
                methods.push_back(pfdkit::method_from_string(method_name));

            std::ostringstream body;
            bool failed = false;
            if (format == "csv")
                body << "scenario,method,value,metadata,error\n";
            for (pfdkit::MethodId m : methods) {
                const pfdkit::MethodCell cell = pfdkit::run_method(s, m, options);
                failed = failed || !cell.ok;
                if (format == "csv") {
                    body << label << ',' << pfdkit::to_string(m) << ',';
                    if (cell.ok) body << pfdkit::detail::format_full(cell.value);
                    body << ',' << cell.metadata << ',' << cell.error << '\n';
                } else {
                    print_run_cell(body, label, m, cell);
                }
            }
            emit(out_path, body.str());
            return failed ? kExitSolver : kExitOk;
        }

        if (table->parsed()) {
            const pfdkit::ComparisonReport report = pfdkit::table2(options);
            std::ostringstream body;
            if (format == "csv")
                pfdkit::write_report_csv(body, report);
            else
                pfdkit::render_report_text(body, report);
            emit(out_path, body.str());
            return kExitOk;
        }

        if (exp->parsed()) {
            if (case_name.empty() && scenario_path.empty())
                throw std::invalid_argument("export needs --case or --scenario");
            if (method_name == "all")
                throw std::invalid_argument("export needs --method fault_tree or markov");
            const pfdkit::Scenario s = load_scenario(case_name, scenario_path);
            const pfdkit::MethodId method = pfdkit::method_from_string(method_name);
            const pfdkit::TimeCurve curve = pfdkit::export_timeseries(s, method, options);
            std::ostringstream body;
            pfdkit::write_timeseries_csv(body, curve);
            emit(out_path, body.str());
            return kExitOk;
        }
    } catch (const pfdkit::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const pfdkit::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
    return kExitOk;
}
