/*
 * Copyright 2026 hflsim contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HFLSIM_SIMPLEX_HPP
#define HFLSIM_SIMPLEX_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hflsim/common.hpp"

namespace hflsim {

/// min c'x  s.t.  a_i'x <= b_i (or = b_i), lower <= x <= upper.
/// All bounds must be finite; labels name constraint families for
/// infeasibility reports.
struct LinearProgram {
    struct Row {
        Eigen::VectorXd a;
        double b = 0.0;
        bool eq = false;
        std::string label;
    };

    int num_vars = 0;
    Eigen::VectorXd c;
    std::vector<Row> rows;
    Eigen::VectorXd lower, upper;

    void validate() const {
        require(num_vars >= 1, "LinearProgram: no variables");
        require(c.size() == num_vars && lower.size() == num_vars &&
                    upper.size() == num_vars,
                "LinearProgram: size mismatch");
        for (int j = 0; j < num_vars; ++j) {
            require(std::isfinite(lower(j)) && std::isfinite(upper(j)) &&
                        lower(j) <= upper(j),
                    "LinearProgram: bounds must be finite with lower <= upper");
        }
        for (const auto& r : rows)
            require(r.a.size() == num_vars, "LinearProgram: row size mismatch");
    }
};

struct LpResult {
    bool feasible = false;
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
    std::string infeasible_label;  // a violated constraint family when infeasible
};

namespace detail {

/// One simplex phase on a dense tableau with Bland's rule: entering column is
/// the lowest-index negative reduced cost, leaving row the lowest basic index
/// among the ratio-test minimizers. Terminates on every input.
inline bool simplex_phase(Eigen::MatrixXd& tab, std::vector<int>& basis,
                          int active_cols, int& iterations, double tol = 1e-9) {
    const int m = static_cast<int>(tab.rows()) - 1;
    const int rhs = static_cast<int>(tab.cols()) - 1;
    const int obj = m;

    for (int guard = 0; guard < 100000; ++guard) {
        int enter = -1;
        for (int j = 0; j < active_cols; ++j) {
            if (tab(obj, j) < -tol) {
                enter = j;
                break;
            }
        }
        if (enter < 0) return true;  // optimal

        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < m; ++i) {
            const double a = tab(i, enter);
            if (a <= tol) continue;
            const double ratio = tab(i, rhs) / a;
            if (leave < 0 || ratio < best_ratio - tol ||
                (ratio < best_ratio + tol && basis[i] < basis[leave])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave < 0) return false;  // unbounded

        tab.row(leave) /= tab(leave, enter);
        for (int i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double factor = tab(i, enter);
            if (factor != 0.0) tab.row(i) -= factor * tab.row(leave);
        }
        basis[leave] = enter;
        ++iterations;
    }
    require(false, "simplex: pivot limit exceeded");
    return false;
}

}  // namespace detail

/// Two-phase dense simplex over the bounded-variable program. Variables are
/// shifted to x = lower + y with y >= 0; upper bounds become explicit rows.
/// Deterministic for a fixed input (Bland's rule everywhere).
inline LpResult solve_lp(const LinearProgram& lp) {
    lp.validate();
    const int n = lp.num_vars;

    // Shifted rows: structural rows first, then the upper-bound rows.
    struct ShiftedRow {
        Eigen::VectorXd a;
        double b;
        bool eq;
        const std::string* label;
    };
    std::vector<ShiftedRow> rows;
    rows.reserve(lp.rows.size() + n);
    static const std::string kBoundLabel = "variable upper bound";
    for (const auto& r : lp.rows)
        rows.push_back({r.a, r.b - r.a.dot(lp.lower), r.eq, &r.label});
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        a(j) = 1.0;
        rows.push_back({std::move(a), lp.upper(j) - lp.lower(j), false, &kBoundLabel});
    }

    const int m = static_cast<int>(rows.size());
    // Columns: n structural, m slacks (unused ones zeroed), m artificials, rhs.
    const int slack0 = n;
    const int art0 = n + m;
    const int total = n + 2 * m;

    Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(m + 1, total + 1);
    std::vector<int> basis(m, -1);
    std::vector<int> art_row(m, -1);

    for (int i = 0; i < m; ++i) {
        Eigen::VectorXd a = rows[i].a;
        double b = rows[i].b;
        double slack_sign = rows[i].eq ? 0.0 : 1.0;
        if (b < 0.0) {
            a = -a;
            b = -b;
            slack_sign = -slack_sign;
        }
        tab.block(i, 0, 1, n) = a.transpose();
        tab(i, total) = b;
        if (slack_sign > 0.0) {
            tab(i, slack0 + i) = 1.0;
            basis[i] = slack0 + i;
        } else {
            if (slack_sign < 0.0) tab(i, slack0 + i) = -1.0;
            tab(i, art0 + i) = 1.0;
            basis[i] = art0 + i;
            art_row[i] = i;
        }
    }

    LpResult res;

    // Phase 1: minimize the artificial sum. The cost row carries a unit cost
    // per artificial column before the basic rows are priced out; without it
    // an artificial could re-enter at apparent profit and mask infeasibility.
    for (int i = 0; i < m; ++i) tab(m, art0 + i) = 1.0;
    for (int i = 0; i < m; ++i)
        if (basis[i] >= art0) tab.row(m) -= tab.row(i);
    detail::simplex_phase(tab, basis, total, res.iterations);

    const double phase1 = -tab(m, total);
    if (phase1 > 1e-7) {
        res.feasible = false;
        // Name the family of a row whose artificial stayed basic and positive.
        res.infeasible_label = "infeasible";
        for (int i = 0; i < m; ++i) {
            if (basis[i] >= art0 && tab(i, total) > 1e-7) {
                res.infeasible_label = *rows[basis[i] - art0].label;
                break;
            }
        }
        return res;
    }

    // Pivot any residual (degenerate) artificials out of the basis.
    for (int i = 0; i < m; ++i) {
        if (basis[i] < art0) continue;
        int enter = -1;
        for (int j = 0; j < art0; ++j) {
            if (std::abs(tab(i, j)) > 1e-9) {
                enter = j;
                break;
            }
        }
        if (enter < 0) continue;  // zero row, constraint redundant
        tab.row(i) /= tab(i, enter);
        for (int r = 0; r <= m; ++r) {
            if (r == i) continue;
            const double factor = tab(r, enter);
            if (factor != 0.0) tab.row(r) -= factor * tab.row(i);
        }
        basis[i] = enter;
    }

    // Phase 2: real objective over structural + slack columns only.
    tab.block(0, art0, m + 1, m).setZero();
    tab.row(m).setZero();
    tab.block(m, 0, 1, n) = lp.c.transpose();
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) tab.row(m) -= lp.c(basis[i]) * tab.row(i);
    const bool bounded = detail::simplex_phase(tab, basis, art0, res.iterations);
    require(bounded, "solve_lp: objective unbounded below");

    res.feasible = true;
    res.x = lp.lower;
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) res.x(basis[i]) += tab(i, total);
    res.objective = lp.c.dot(res.x);
    return res;
}

}  // namespace hflsim

#endif  // HFLSIM_SIMPLEX_HPP
