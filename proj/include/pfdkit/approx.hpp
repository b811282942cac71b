#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pfdkit/scenario.hpp"

namespace pfdkit {

// Exact binomial coefficient n!/(k!(n-k)!), integer arithmetic.
// Architectures handled here stay in single digits; 20 is a hard cap.
inline long long binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n)
        throw std::invalid_argument("binomial: need 0 <= k <= n, got n=" +
                                    std::to_string(n) + " k=" + std::to_string(k));
    if (n > 20)
        throw std::invalid_argument("binomial: n=" + std::to_string(n) +
                                    " exceeds supported maximum 20");
    k = std::min(k, n - k);
    long long result = 1;
    for (int j = 1; j <= k; ++j) {
        result = result * (n - k + j) / j;  // exact: divides a product of j consecutive ints
    }
    return result;
}

// Common-cause weighting used by the mixed terms: full rate when a
// single failure of the group is considered, independent part otherwise.
inline double f_factor(int x, double b) {
    if (x < 1)
        throw std::invalid_argument("f_factor: x must be >= 1, got " + std::to_string(x));
    return x == 1 ? 1.0 : 1.0 - b;
}

struct ApproxResult {
    double pfd_avg = 0.0;
    bool valid_dut = true;  // lambda_dut * t1 < 0.1
    bool valid_duu = true;  // lambda_duu * t0 < 0.1
    std::vector<std::pair<std::string, double>> term_breakdown;
};

// First-order closed-form PFD_avg of an MooN architecture. Values are
// returned even when the validity screening fails; callers must check
// the flags. The result is not clamped to 1: it is a Taylor expansion
// and out-of-scope inputs are reported raw rather than masked.
inline ApproxResult approx_pfd(const Scenario& s) {
    s.validate();
    const DerivedRates r = derive_rates(s);
    const int big_n = s.n;
    const int group = s.n - s.m + 1;  // simultaneous failures that defeat the vote
    const int spare = s.n - s.m;
    const double t1 = s.t1;
    const double t0 = s.t0;

    // lambda/mu ratios with the 0/0 -> 0 convention (no failures means no
    // contribution regardless of repair capacity).
    const double dd_ratio = r.lambda_dd == 0.0 ? 0.0 : r.lambda_dd / s.mu_dd;
    const double dut_repair = 1.0 / s.mu_dut;  // may be inf when mu_dut = 0

    double dd_pure = 0.0, dut_pure = 0.0, duu_pure = 0.0;
    double dd_dut = 0.0, dd_duu = 0.0, dut_duu = 0.0, dd_dut_duu = 0.0;

    dd_pure = static_cast<double>(binomial(big_n, group)) *
              std::pow((1.0 - s.beta_dd) * dd_ratio, group);
    if (r.lambda_dut > 0.0) {
        dut_pure = static_cast<double>(binomial(big_n, group)) *
                   std::pow((1.0 - s.beta_dut) * r.lambda_dut, group) *
                   std::pow(t1, spare) * (t1 / (spare + 2) + dut_repair);
    }
    if (r.lambda_duu > 0.0) {
        duu_pure = static_cast<double>(binomial(big_n, group)) *
                   std::pow((1.0 - s.beta_duu) * r.lambda_duu, group) *
                   std::pow(t0, spare) * (t0 / (spare + 2));
    }

    for (int i = 1; i <= spare; ++i) {
        const double dd_part = static_cast<double>(binomial(big_n - i, group - i)) *
                               std::pow(f_factor(group - i, s.beta_dd) * dd_ratio, group - i);
        if (r.lambda_dut > 0.0) {
            dd_dut += dd_part * static_cast<double>(binomial(big_n, i)) *
                      std::pow(f_factor(i, s.beta_dut) * r.lambda_dut, i) *
                      std::pow(t1, i - 1) * (t1 / (i + 1) + dut_repair);
        }
        if (r.lambda_duu > 0.0) {
            dd_duu += dd_part * static_cast<double>(binomial(big_n, i)) *
                      std::pow(f_factor(i, s.beta_duu) * r.lambda_duu, i) *
                      std::pow(t0, i - 1) * (t0 / (i + 1));
        }
        if (r.lambda_dut > 0.0 && r.lambda_duu > 0.0) {
            dut_duu += static_cast<double>(binomial(big_n - i, group - i)) *
                       std::pow((1.0 - s.beta_dut) * r.lambda_dut, group - i) *
                       std::pow(t1, spare - i) * (t1 / (spare + 2 - i) + dut_repair) *
                       static_cast<double>(binomial(big_n, i)) *
                       std::pow((1.0 - s.beta_duu) * r.lambda_duu, i) *
                       std::pow(t0, i - 1) * (t0 / (i + 1));
        }
    }

    if (r.lambda_dut > 0.0 && r.lambda_duu > 0.0) {
        for (int i = 1; i <= spare - 1; ++i) {
            for (int j = 1; j <= spare - i; ++j) {
                dd_dut_duu +=
                    static_cast<double>(binomial(big_n - i - j, group - i - j)) *
                    std::pow(f_factor(group - i - j, s.beta_dd) * dd_ratio, group - i - j) *
                    static_cast<double>(binomial(big_n - i, j)) *
                    std::pow((1.0 - s.beta_dut) * r.lambda_dut, j) *
                    std::pow(t1, j - 1) * (t1 / (j + 1) + dut_repair) *
                    static_cast<double>(binomial(big_n, i)) *
                    std::pow((1.0 - s.beta_duu) * r.lambda_duu, i) *
                    std::pow(t0, i - 1) * (t0 / (i + 1));
            }
        }
    }

    double ccf = s.beta_dd * dd_ratio;
    if (r.lambda_dut > 0.0)
        ccf += s.beta_dut * r.lambda_dut * (t1 / 2.0 + dut_repair);
    ccf += s.beta_duu * r.lambda_duu * (t0 / 2.0);

    ApproxResult out;
    out.term_breakdown = {
        {"dd_independent", dd_pure},
        {"dut_independent", dut_pure},
        {"duu_independent", duu_pure},
        {"dd_dut_mixed", dd_dut},
        {"dd_duu_mixed", dd_duu},
        {"dut_duu_mixed", dut_duu},
        {"dd_dut_duu_mixed", dd_dut_duu},
        {"ccf", ccf},
    };
    for (const auto& [label, value] : out.term_breakdown) out.pfd_avg += value;
    out.valid_dut = r.lambda_dut * t1 < 0.1;
    out.valid_duu = r.lambda_duu * t0 < 0.1;
    return out;
}

}  // namespace pfdkit
