#pragma once

// Feasibility of a conjunction of non-strict linear constraints, decided by a
// dense phase-1 simplex with Bland's rule. Only the question "is there a
// point?" is answered; no objective is optimized.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "napv/error.hpp"
#include "napv/model.hpp"

namespace napv {

enum class Relation { less_equal, greater_equal, equal };

struct LinearTerm {
    std::size_t variable = 0;
    double coefficient = 0.0;
};

struct LinearConstraint {
    std::vector<LinearTerm> terms; // sorted by variable, no duplicates, no zeros
    Relation relation = Relation::less_equal;
    double rhs = 0.0;

    LinearConstraint() = default;
    LinearConstraint(std::vector<LinearTerm> t, Relation rel, double b) : relation(rel), rhs(b) {
        std::sort(t.begin(), t.end(), [](const LinearTerm& a, const LinearTerm& c) { return a.variable < c.variable; });
        for (const LinearTerm& term : t) {
            if (!terms.empty() && terms.back().variable == term.variable) {
                terms.back().coefficient += term.coefficient;
            } else {
                terms.push_back(term);
            }
        }
        std::erase_if(terms, [](const LinearTerm& term) { return term.coefficient == 0.0; });
    }
    LinearConstraint(std::initializer_list<LinearTerm> t, Relation rel, double b)
        : LinearConstraint(std::vector<LinearTerm>(t), rel, b) {}

    [[nodiscard]] double lhs(std::span<const double> point) const {
        double acc = 0.0;
        for (const LinearTerm& t : terms) acc += t.coefficient * point[t.variable];
        return acc;
    }

    [[nodiscard]] double scale() const noexcept {
        double s = 0.0;
        for (const LinearTerm& t : terms) s = std::max(s, std::abs(t.coefficient));
        return s;
    }

    /// Amount by which `point` misses the constraint, measured on the row
    /// normalized to unit max coefficient (rows with tiny coefficients are not
    /// blown up).
    [[nodiscard]] double violation(std::span<const double> point) const {
        const double value = lhs(point);
        double miss = 0.0;
        switch (relation) {
        case Relation::less_equal: miss = value - rhs; break;
        case Relation::greater_equal: miss = rhs - value; break;
        case Relation::equal: miss = std::abs(value - rhs); break;
        }
        return std::max(0.0, miss) / std::max(1.0, scale());
    }
};

struct VariableBounds {
    std::optional<double> lower;
    std::optional<double> upper;
};

struct LinearProgram {
    std::size_t variable_count = 0;
    std::vector<LinearConstraint> constraints;
    std::vector<VariableBounds> bounds; // empty or one entry per variable

    LinearProgram() = default;
    explicit LinearProgram(std::size_t n) : variable_count(n), bounds(n) {}

    std::size_t add_variable(std::optional<double> lower = std::nullopt, std::optional<double> upper = std::nullopt) {
        bounds.resize(variable_count);
        bounds.push_back({lower, upper});
        return variable_count++;
    }

    void add(LinearConstraint c) { constraints.push_back(std::move(c)); }

    [[nodiscard]] VariableBounds bound(std::size_t j) const { return j < bounds.size() ? bounds[j] : VariableBounds{}; }

    void validate() const {
        if (!bounds.empty() && bounds.size() != variable_count) {
            throw ValidationError("lp: bounds size does not match variable count");
        }
        for (std::size_t j = 0; j < bounds.size(); ++j) {
            const auto& b = bounds[j];
            if ((b.lower && std::isnan(*b.lower)) || (b.upper && std::isnan(*b.upper))) {
                throw ValidationError("lp: NaN bound on variable " + std::to_string(j));
            }
            if (b.lower && b.upper && *b.lower > *b.upper) {
                throw ValidationError("lp: lower > upper on variable " + std::to_string(j));
            }
        }
        for (std::size_t i = 0; i < constraints.size(); ++i) {
            const auto& c = constraints[i];
            if (c.terms.empty()) throw ValidationError("lp: constraint " + std::to_string(i) + " has no nonzero coefficient");
            if (!std::isfinite(c.rhs)) throw ValidationError("lp: constraint " + std::to_string(i) + " has non-finite rhs");
            for (const auto& t : c.terms) {
                if (t.variable >= variable_count) {
                    throw ValidationError("lp: constraint " + std::to_string(i) + " references variable " +
                                          std::to_string(t.variable));
                }
                if (!std::isfinite(t.coefficient)) {
                    throw ValidationError("lp: constraint " + std::to_string(i) + " has a non-finite coefficient");
                }
            }
        }
    }

    /// Largest violation over all constraints and bounds at `point`.
    [[nodiscard]] double max_violation(std::span<const double> point) const {
        double worst = 0.0;
        for (const auto& c : constraints) worst = std::max(worst, c.violation(point));
        for (std::size_t j = 0; j < bounds.size(); ++j) {
            if (bounds[j].lower) worst = std::max(worst, *bounds[j].lower - point[j]);
            if (bounds[j].upper) worst = std::max(worst, point[j] - *bounds[j].upper);
        }
        return worst;
    }
};

struct FeasibilityResult {
    enum class Status { feasible, infeasible };
    Status status = Status::infeasible;
    Vector point; // meaningful only when feasible
    std::size_t iterations = 0;

    [[nodiscard]] bool feasible() const noexcept { return status == Status::feasible; }
};

struct SolverOptions {
    double tolerance = 1e-7;           // witness violation / phase-1 optimum
    std::size_t iteration_factor = 50; // cap = factor * (rows + columns)
    std::ostream* tableau_dump = nullptr;
};

namespace detail {

class Phase1Tableau {
public:
    Phase1Tableau(const LinearProgram& lp, const SolverOptions& opts) : opts_(opts) {
        map_variables(lp);
        build_rows(lp);
    }

    FeasibilityResult solve(const LinearProgram& lp) {
        const std::size_t cap = opts_.iteration_factor * (rows_ + cols_);
        std::size_t iterations = 0;
        while (true) {
            const auto entering = choose_entering();
            if (!entering) break;
            const auto leaving = choose_leaving(*entering);
            if (!leaving) {
                // Phase-1 objective is bounded below by zero; an unbounded ray
                // means the tableau has lost accuracy.
                throw LpInstabilityError("lp: unbounded direction in phase 1");
            }
            pivot(*leaving, *entering);
            if (++iterations > cap) {
                throw LpInstabilityError("lp: iteration cap of " + std::to_string(cap) + " exceeded");
            }
        }
        if (opts_.tableau_dump != nullptr) dump(*opts_.tableau_dump);

        FeasibilityResult result;
        result.iterations = iterations;
        const double objective = -at(rows_, cols_);
        if (objective > opts_.tolerance) {
            result.status = FeasibilityResult::Status::infeasible;
            return result;
        }
        result.point = recover_point(lp);
        if (lp.max_violation(result.point) > opts_.tolerance) {
            throw LpInstabilityError("lp: witness fails re-check against the original constraints");
        }
        result.status = FeasibilityResult::Status::feasible;
        return result;
    }

private:
    struct Column {
        std::size_t index;
        double sign;
    };
    // Original variable = offset + sum(sign * column value).
    struct VariableMap {
        double offset = 0.0;
        std::vector<Column> columns;
    };
    struct PendingRow {
        std::vector<std::pair<std::size_t, double>> coefs;
        Relation relation;
        double rhs;
    };

    void map_variables(const LinearProgram& lp) {
        maps_.resize(lp.variable_count);
        for (std::size_t j = 0; j < lp.variable_count; ++j) {
            const auto b = lp.bound(j);
            VariableMap& m = maps_[j];
            if (b.lower) {
                m.offset = *b.lower;
                m.columns.push_back({structural_++, 1.0});
                if (b.upper) upper_rows_.push_back({m.columns[0].index, *b.upper - *b.lower});
            } else if (b.upper) {
                m.offset = *b.upper;
                m.columns.push_back({structural_++, -1.0});
            } else {
                m.columns.push_back({structural_++, 1.0});
                m.columns.push_back({structural_++, -1.0});
            }
        }
    }

    void build_rows(const LinearProgram& lp) {
        std::vector<PendingRow> pending;
        for (const auto& c : lp.constraints) {
            PendingRow row{{}, c.relation, c.rhs};
            for (const auto& t : c.terms) {
                const VariableMap& m = maps_[t.variable];
                row.rhs -= t.coefficient * m.offset;
                for (const Column& col : m.columns) row.coefs.emplace_back(col.index, t.coefficient * col.sign);
            }
            if (row.relation == Relation::equal) {
                PendingRow upper = row;
                upper.relation = Relation::less_equal;
                row.relation = Relation::greater_equal;
                pending.push_back(std::move(upper));
            }
            pending.push_back(std::move(row));
        }
        for (const auto& [col, width] : upper_rows_) {
            pending.push_back({{{col, 1.0}}, Relation::less_equal, width});
        }

        // Normalize: unit max coefficient, non-negative rhs.
        std::size_t slack_count = 0;
        std::size_t artificial_count = 0;
        for (auto& row : pending) {
            double s = 0.0;
            for (const auto& [col, a] : row.coefs) s = std::max(s, std::abs(a));
            if (s > 0.0) {
                for (auto& [col, a] : row.coefs) a /= s;
                row.rhs /= s;
            }
            if (row.rhs < 0.0 || (row.rhs == 0.0 && row.relation == Relation::greater_equal)) {
                for (auto& [col, a] : row.coefs) a = -a;
                row.rhs = -row.rhs;
                row.relation = row.relation == Relation::less_equal ? Relation::greater_equal : Relation::less_equal;
            }
            ++slack_count;
            if (row.relation == Relation::greater_equal) ++artificial_count;
        }

        rows_ = pending.size();
        first_artificial_ = structural_ + slack_count;
        cols_ = first_artificial_ + artificial_count;
        table_.assign((rows_ + 1) * (cols_ + 1), 0.0);
        basis_.assign(rows_, 0);

        std::size_t next_slack = structural_;
        std::size_t next_artificial = first_artificial_;
        for (std::size_t i = 0; i < rows_; ++i) {
            const auto& row = pending[i];
            for (const auto& [col, a] : row.coefs) at(i, col) += a;
            at(i, cols_) = row.rhs;
            if (row.relation == Relation::less_equal) {
                at(i, next_slack) = 1.0;
                basis_[i] = next_slack++;
            } else {
                at(i, next_slack++) = -1.0;
                at(i, next_artificial) = 1.0;
                basis_[i] = next_artificial++;
            }
        }
        // Reduced costs of the phase-1 objective (sum of artificials).
        for (std::size_t i = 0; i < rows_; ++i) {
            if (basis_[i] < first_artificial_) continue;
            for (std::size_t j = 0; j <= cols_; ++j) {
                if (j < first_artificial_ || j == cols_) at(rows_, j) -= at(i, j);
            }
        }
    }

    double& at(std::size_t i, std::size_t j) { return table_[i * (cols_ + 1) + j]; }

    std::optional<std::size_t> choose_entering() {
        for (std::size_t j = 0; j < cols_; ++j) {
            if (at(rows_, j) < -kCostEps) return j;
        }
        return std::nullopt;
    }

    std::optional<std::size_t> choose_leaving(std::size_t entering) {
        std::optional<std::size_t> best;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < rows_; ++i) {
            const double a = at(i, entering);
            if (a <= kPivotEps) continue;
            const double ratio = std::max(0.0, at(i, cols_)) / a;
            if (!best) {
                best = i;
                best_ratio = ratio;
                continue;
            }
            const double tie = 1e-12 * std::max(1.0, best_ratio);
            if (ratio < best_ratio - tie) {
                best = i;
                best_ratio = ratio;
            } else if (ratio <= best_ratio + tie && basis_[i] < basis_[*best]) {
                best = i;
            }
        }
        return best;
    }

    void pivot(std::size_t r, std::size_t c) {
        const std::size_t stride = cols_ + 1;
        double* prow = &table_[r * stride];
        const double inv = 1.0 / prow[c];
        for (std::size_t j = 0; j < stride; ++j) prow[j] *= inv;
        prow[c] = 1.0;
        for (std::size_t i = 0; i <= rows_; ++i) {
            if (i == r) continue;
            double* row = &table_[i * stride];
            const double f = row[c];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < stride; ++j) {
                if (prow[j] != 0.0) row[j] -= f * prow[j];
            }
            row[c] = 0.0;
        }
        basis_[r] = c;
    }

    Vector recover_point(const LinearProgram& lp) {
        std::vector<double> value(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) value[basis_[i]] = std::max(0.0, at(i, cols_));
        Vector point(lp.variable_count, 0.0);
        for (std::size_t j = 0; j < lp.variable_count; ++j) {
            double x = maps_[j].offset;
            for (const Column& col : maps_[j].columns) x += col.sign * value[col.index];
            const auto b = lp.bound(j);
            if (b.lower) x = std::max(x, *b.lower);
            if (b.upper) x = std::min(x, *b.upper);
            point[j] = x;
        }
        return point;
    }

    void dump(std::ostream& out) {
        out << "basis";
        for (std::size_t j = 0; j < cols_; ++j) out << ",c" << j;
        out << ",rhs\n";
        for (std::size_t i = 0; i <= rows_; ++i) {
            out << (i == rows_ ? std::string("obj") : std::to_string(basis_[i]));
            for (std::size_t j = 0; j <= cols_; ++j) out << ',' << at(i, j);
            out << '\n';
        }
    }

    static constexpr double kCostEps = 1e-11;
    static constexpr double kPivotEps = 1e-11;

    SolverOptions opts_;
    std::vector<VariableMap> maps_;
    std::vector<std::pair<std::size_t, double>> upper_rows_;
    std::size_t structural_ = 0;
    std::size_t first_artificial_ = 0;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> table_;
    std::vector<std::size_t> basis_;
};

} // namespace detail

/// Decides whether `lp` has a point satisfying every constraint and bound.
/// A feasible result carries a witness re-checked at `opts.tolerance`;
/// infeasible means the phase-1 optimum exceeded that tolerance. Throws
/// LpInstabilityError when neither can be certified.
[[nodiscard]] inline FeasibilityResult solve_feasibility(const LinearProgram& lp, const SolverOptions& opts = {}) {
    lp.validate();
    detail::Phase1Tableau tableau(lp, opts);
    return tableau.solve(lp);
}

} // namespace napv
