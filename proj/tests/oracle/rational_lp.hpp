#pragma once

// Exact two-phase simplex over GMP rationals. Test-only oracle: it shares no
// code with napv::solve_feasibility beyond the LinearProgram data type.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include <gmpxx.h>

#include "napv/lp.hpp"

namespace oracle {

using Q = mpq_class;

/// maximize c·z subject to A z <= b, z >= 0.
struct QProgram {
    std::size_t vars = 0;
    std::vector<std::vector<Q>> a;
    std::vector<Q> b;
    std::vector<Q> objective; // empty = feasibility only

    void add_row(std::vector<Q> row, Q rhs) {
        row.resize(vars);
        a.push_back(std::move(row));
        b.push_back(std::move(rhs));
    }
};

struct QResult {
    bool feasible = false;
    bool unbounded = false;
    std::vector<Q> point;
    Q optimum;
};

namespace detail {

class QTableau {
public:
    explicit QTableau(const QProgram& p) : n_(p.vars), m_(p.a.size()) {
        std::size_t arts = 0;
        for (const Q& bi : p.b) arts += bi < 0 ? 1 : 0;
        first_art_ = n_ + m_;
        cols_ = first_art_ + arts;
        t_.assign(m_, std::vector<Q>(cols_ + 1, Q(0)));
        basis_.assign(m_, 0);
        std::size_t art = first_art_;
        for (std::size_t i = 0; i < m_; ++i) {
            const Q sign = p.b[i] < 0 ? Q(-1) : Q(1);
            for (std::size_t j = 0; j < n_; ++j) t_[i][j] = sign * p.a[i][j];
            t_[i][n_ + i] = sign;
            t_[i][cols_] = sign * p.b[i];
            if (p.b[i] < 0) {
                t_[i][art] = 1;
                basis_[i] = art++;
            } else {
                basis_[i] = n_ + i;
            }
        }
    }

    QResult run(const std::vector<Q>& objective) {
        QResult r;
        std::vector<Q> phase1(cols_, Q(0));
        for (std::size_t j = first_art_; j < cols_; ++j) phase1[j] = -1;
        if (maximize(phase1, cols_) == Outcome::unbounded) throw std::logic_error("phase 1 unbounded");
        if (value(phase1) < 0) return r;
        drive_out_artificials();
        r.feasible = true;
        if (!objective.empty()) {
            std::vector<Q> c(cols_, Q(0));
            for (std::size_t j = 0; j < n_; ++j) c[j] = objective[j];
            if (maximize(c, first_art_) == Outcome::unbounded) {
                r.unbounded = true;
            } else {
                r.optimum = value(c);
            }
        }
        r.point.assign(n_, Q(0));
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            if (basis_[i] < n_) r.point[basis_[i]] = t_[i][cols_];
        }
        return r;
    }

private:
    enum class Outcome { optimal, unbounded };

    Q value(const std::vector<Q>& c) const {
        Q v = 0;
        for (std::size_t i = 0; i < basis_.size(); ++i) v += c[basis_[i]] * t_[i][cols_];
        return v;
    }

    // Bland's rule; only columns < limit may enter.
    Outcome maximize(const std::vector<Q>& c, std::size_t limit) {
        while (true) {
            std::optional<std::size_t> enter;
            for (std::size_t j = 0; j < limit && !enter; ++j) {
                Q reduced = c[j];
                for (std::size_t i = 0; i < basis_.size(); ++i) reduced -= c[basis_[i]] * t_[i][j];
                if (reduced > 0) enter = j;
            }
            if (!enter) return Outcome::optimal;
            std::optional<std::size_t> leave;
            Q best;
            for (std::size_t i = 0; i < basis_.size(); ++i) {
                if (t_[i][*enter] <= 0) continue;
                Q ratio = t_[i][cols_] / t_[i][*enter];
                if (!leave || ratio < best || (ratio == best && basis_[i] < basis_[*leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (!leave) return Outcome::unbounded;
            pivot(*leave, *enter);
        }
    }

    void pivot(std::size_t r, std::size_t c) {
        const Q inv = 1 / t_[r][c];
        for (Q& v : t_[r]) v *= inv;
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (i == r || t_[i][c] == 0) continue;
            const Q f = t_[i][c];
            for (std::size_t j = 0; j <= cols_; ++j) {
                if (t_[r][j] != 0) t_[i][j] -= f * t_[r][j];
            }
        }
        basis_[r] = c;
    }

    void drive_out_artificials() {
        for (std::size_t i = 0; i < basis_.size();) {
            if (basis_[i] < first_art_) {
                ++i;
                continue;
            }
            std::optional<std::size_t> col;
            for (std::size_t j = 0; j < first_art_ && !col; ++j) {
                if (t_[i][j] != 0) col = j;
            }
            if (col) {
                pivot(i, *col);
                ++i;
            } else {
                t_.erase(t_.begin() + static_cast<std::ptrdiff_t>(i));
                basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
    }

    std::size_t n_;
    std::size_t m_;
    std::size_t first_art_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::vector<Q>> t_;
    std::vector<std::size_t> basis_;
};

} // namespace detail

[[nodiscard]] inline QResult solve(const QProgram& p) {
    detail::QTableau t(p);
    return t.run(p.objective);
}

/// Exact status of a double-valued LinearProgram: each variable becomes
/// lower + z, upper - z, or z+ - z-, and every relation becomes <= rows.
[[nodiscard]] inline bool feasible(const napv::LinearProgram& lp) {
    struct Map {
        Q offset;
        std::vector<std::pair<std::size_t, Q>> cols;
    };
    std::vector<Map> maps(lp.variable_count);
    std::size_t vars = 0;
    std::vector<std::pair<std::size_t, Q>> caps;
    for (std::size_t j = 0; j < lp.variable_count; ++j) {
        const auto b = lp.bound(j);
        if (b.lower) {
            maps[j] = {Q(*b.lower), {{vars, Q(1)}}};
            if (b.upper) caps.emplace_back(vars, Q(*b.upper) - Q(*b.lower));
            ++vars;
        } else if (b.upper) {
            maps[j] = {Q(*b.upper), {{vars++, Q(-1)}}};
        } else {
            maps[j] = {Q(0), {{vars, Q(1)}, {vars + 1, Q(-1)}}};
            vars += 2;
        }
    }
    QProgram p;
    p.vars = vars;
    for (const auto& c : lp.constraints) {
        std::vector<Q> row(vars, Q(0));
        Q rhs(c.rhs);
        for (const auto& t : c.terms) {
            const Q coef(t.coefficient);
            rhs -= coef * maps[t.variable].offset;
            for (const auto& [col, sign] : maps[t.variable].cols) row[col] += coef * sign;
        }
        if (c.relation != napv::Relation::greater_equal) p.add_row(row, rhs);
        if (c.relation != napv::Relation::less_equal) {
            for (Q& v : row) v = -v;
            p.add_row(row, -rhs);
        }
    }
    for (const auto& [col, cap] : caps) {
        std::vector<Q> row(vars, Q(0));
        row[col] = 1;
        p.add_row(row, cap);
    }
    return solve(p).feasible;
}

} // namespace oracle
