#pragma once

#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pfdkit {

/// A scenario field failed range or consistency checks.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Malformed input text (scenario or report files).
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message),
          line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// A numerical solver could not reach its tolerance, or an engine
/// detected an internal inconsistency.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Full parameter set of one M-out-of-N configuration. All rates are per
// hour, all durations in hours. The dangerous failure rate lambda_d is
// split by diagnostic coverage (dc) and proof test coverage (ptc) into
// the DD / DUT / DUU modes, each with its own common cause fraction.
struct Scenario {
    int m = 1;              // channels required operating
    int n = 1;              // channels total
    double lambda_d = 0.0;  // dangerous failure rate of one channel
    double dc = 0.0;        // diagnostic coverage
    double ptc = 0.0;       // proof test coverage
    double beta_dd = 0.0;
    double beta_dut = 0.0;
    double beta_duu = 0.0;
    double mu_dd = 0.0;     // repair rate, failures detected online
    double mu_dut = 0.0;    // repair rate, failures detected by proof test
    double t1 = 0.0;        // proof test period
    double t0 = 0.0;        // computation horizon, integer multiple of t1

    void validate() const;

    // Number of whole proof-test cycles in [0, t0].
    long long phases() const { return std::llround(t0 / t1); }

    bool operator==(const Scenario&) const = default;
};

namespace detail {

inline bool is_fraction(double x) { return x >= 0.0 && x <= 1.0 && std::isfinite(x); }
inline bool is_rate(double x) { return x >= 0.0 && std::isfinite(x); }

}  // namespace detail

inline void Scenario::validate() const {
    if (n < 1)
        throw ValidationError("n", "n must be at least 1");
    if (m < 1)
        throw ValidationError("m", "m must be at least 1");
    if (m > n)
        throw ValidationError("m", "m exceeds n");
    if (!detail::is_rate(lambda_d))
        throw ValidationError("lambda_d", "lambda_d must be a finite rate >= 0");
    if (!detail::is_fraction(dc))
        throw ValidationError("dc", "dc must lie in [0,1]");
    if (!detail::is_fraction(ptc))
        throw ValidationError("ptc", "ptc must lie in [0,1]");
    if (!detail::is_fraction(beta_dd))
        throw ValidationError("beta_dd", "beta_dd must lie in [0,1]");
    if (!detail::is_fraction(beta_dut))
        throw ValidationError("beta_dut", "beta_dut must lie in [0,1]");
    if (!detail::is_fraction(beta_duu))
        throw ValidationError("beta_duu", "beta_duu must lie in [0,1]");
    if (!detail::is_rate(mu_dd))
        throw ValidationError("mu_dd", "mu_dd must be a finite rate >= 0");
    if (!detail::is_rate(mu_dut))
        throw ValidationError("mu_dut", "mu_dut must be a finite rate >= 0");
    if (!(t1 > 0.0) || !std::isfinite(t1))
        throw ValidationError("t1", "t1 must be positive");
    if (!(t0 >= t1) || !std::isfinite(t0))
        throw ValidationError("t0", "t0 must be at least t1");
    const double cycles = t0 / t1;
    if (std::abs(cycles - std::round(cycles)) > 1e-9 * cycles)
        throw ValidationError("t0", "t0 must be an integer multiple of t1");
}

// Per-mode failure rates with their independent / common-cause split.
struct DerivedRates {
    double lambda_dd = 0.0;
    double lambda_du = 0.0;
    double lambda_dut = 0.0;
    double lambda_duu = 0.0;
    double lambda_dd_ind = 0.0;
    double lambda_dd_ccf = 0.0;
    double lambda_dut_ind = 0.0;
    double lambda_dut_ccf = 0.0;
    double lambda_duu_ind = 0.0;
    double lambda_duu_ccf = 0.0;
};

inline DerivedRates derive_rates(const Scenario& s) {
    s.validate();
    DerivedRates r;
    r.lambda_dd = s.dc * s.lambda_d;
    r.lambda_du = (1.0 - s.dc) * s.lambda_d;
    r.lambda_dut = s.ptc * r.lambda_du;
    r.lambda_duu = (1.0 - s.ptc) * r.lambda_du;
    r.lambda_dd_ind = (1.0 - s.beta_dd) * r.lambda_dd;
    r.lambda_dd_ccf = s.beta_dd * r.lambda_dd;
    r.lambda_dut_ind = (1.0 - s.beta_dut) * r.lambda_dut;
    r.lambda_dut_ccf = s.beta_dut * r.lambda_dut;
    r.lambda_duu_ind = (1.0 - s.beta_duu) * r.lambda_duu;
    r.lambda_duu_ccf = s.beta_duu * r.lambda_duu;
    return r;
}

// The six built-in parameter sets of the case study.
enum class CaseId { i, ii, iii, iv, v, vi };

inline constexpr CaseId kAllCases[] = {CaseId::i,  CaseId::ii, CaseId::iii,
                                       CaseId::iv, CaseId::v,  CaseId::vi};

inline const char* to_string(CaseId id) {
    switch (id) {
        case CaseId::i: return "i";
        case CaseId::ii: return "ii";
        case CaseId::iii: return "iii";
        case CaseId::iv: return "iv";
        case CaseId::v: return "v";
        case CaseId::vi: return "vi";
    }
    throw std::invalid_argument("invalid CaseId");
}

inline CaseId case_from_string(const std::string& text) {
    for (CaseId id : kAllCases)
        if (text == to_string(id)) return id;
    throw std::invalid_argument("unknown case id '" + text +
                                "' (valid: i, ii, iii, iv, v, vi)");
}

inline Scenario builtin_case(CaseId id) {
    Scenario s;
    s.t0 = 70128.0;  // 8 years, common to all cases
    const bool low_rate_set = (id == CaseId::i || id == CaseId::iii || id == CaseId::v);
    if (low_rate_set) {
        s.lambda_d = 2.7e-6;
        s.dc = 0.50;
        s.ptc = 0.90;
        s.beta_dd = 0.02;
        s.beta_dut = 0.05;
        s.beta_duu = 0.05;
        s.mu_dd = 0.0417;
        s.mu_dut = 0.0417;
        s.t1 = 4383.0;
    } else {
        s.lambda_d = 1.35e-5;
        s.dc = 0.25;
        s.ptc = 0.70;
        s.beta_dd = 0.05;
        s.beta_dut = 0.10;
        s.beta_duu = 0.10;
        s.mu_dd = 0.0833;
        s.mu_dut = 0.0833;
        s.t1 = 8766.0;
    }
    switch (id) {
        case CaseId::i:
        case CaseId::ii: s.m = 1; s.n = 1; break;
        case CaseId::iii:
        case CaseId::iv: s.m = 1; s.n = 2; break;
        case CaseId::v:
        case CaseId::vi: s.m = 2; s.n = 3; break;
    }
    s.validate();
    return s;
}

namespace detail {

inline std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

inline double parse_number(const std::string& value, int line, const std::string& key) {
    char* end = nullptr;
    const double x = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ParseError(line, "invalid number '" + value + "' for key '" + key + "'");
    return x;
}

inline int parse_integer(const std::string& value, int line, const std::string& key) {
    char* end = nullptr;
    const long x = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ParseError(line, "invalid integer '" + value + "' for key '" + key + "'");
    return static_cast<int>(x);
}

}  // namespace detail

// Reads the line-oriented `key = value` scenario format. `#` starts a
// comment, a single `[scenario]` section header is required, and all
// twelve keys must be present.
inline Scenario parse_scenario(std::istream& in) {
    static const std::vector<std::string> kKeys = {
        "m", "n", "lambda_d", "dc", "ptc", "beta_dd", "beta_dut", "beta_duu",
        "mu_dd", "mu_dut", "t1", "t0"};

    std::map<std::string, std::pair<std::string, int>> seen;  // key -> (value, line)
    bool header_seen = false;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string text = detail::trim(raw);
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text != "[scenario]")
                throw ParseError(line, "unexpected section '" + text + "'");
            if (header_seen)
                throw ParseError(line, "duplicate [scenario] section");
            header_seen = true;
            continue;
        }
        if (!header_seen)
            throw ParseError(line, "expected [scenario] section header");
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ParseError(line, "expected 'key = value'");
        const std::string key = detail::trim(text.substr(0, eq));
        const std::string value = detail::trim(text.substr(eq + 1));
        bool known = false;
        for (const auto& k : kKeys) known = known || (k == key);
        if (!known)
            throw ParseError(line, "unknown key '" + key + "'");
        if (seen.count(key))
            throw ParseError(line, "duplicate key '" + key + "'");
        if (value.empty())
            throw ParseError(line, "missing value for key '" + key + "'");
        if (key == "m" || key == "n")
            (void)detail::parse_integer(value, line, key);
        else
            (void)detail::parse_number(value, line, key);
        seen.emplace(key, std::make_pair(value, line));
    }
    if (!header_seen)
        throw ParseError(line, "expected [scenario] section header");
    for (const auto& key : kKeys)
        if (!seen.count(key))
            throw ValidationError(key, "missing field '" + key + "'");

    Scenario s;
    s.m = detail::parse_integer(seen["m"].first, seen["m"].second, "m");
    s.n = detail::parse_integer(seen["n"].first, seen["n"].second, "n");
    s.lambda_d = detail::parse_number(seen["lambda_d"].first, seen["lambda_d"].second, "lambda_d");
    s.dc = detail::parse_number(seen["dc"].first, seen["dc"].second, "dc");
    s.ptc = detail::parse_number(seen["ptc"].first, seen["ptc"].second, "ptc");
    s.beta_dd = detail::parse_number(seen["beta_dd"].first, seen["beta_dd"].second, "beta_dd");
    s.beta_dut = detail::parse_number(seen["beta_dut"].first, seen["beta_dut"].second, "beta_dut");
    s.beta_duu = detail::parse_number(seen["beta_duu"].first, seen["beta_duu"].second, "beta_duu");
    s.mu_dd = detail::parse_number(seen["mu_dd"].first, seen["mu_dd"].second, "mu_dd");
    s.mu_dut = detail::parse_number(seen["mu_dut"].first, seen["mu_dut"].second, "mu_dut");
    s.t1 = detail::parse_number(seen["t1"].first, seen["t1"].second, "t1");
    s.t0 = detail::parse_number(seen["t0"].first, seen["t0"].second, "t0");
    s.validate();
    return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

}  // namespace pfdkit
