#include "coalctl/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace coalctl::lp {

namespace {

// Reduced costs smaller than this are treated as zero. It sits well below the
// transfer regularizer used by the dispatch builders (1e-9 per kWh).
constexpr double kOptimalityTolerance = 1e-11;
constexpr std::size_t kIterationLimit = 200000;

double row_scale(const std::vector<double>& row) {
    double scale = 0.0;
    for (double a : row) scale = std::max(scale, std::abs(a));
    return scale > 0.0 ? scale : 1.0;
}

// Working tableau for the bounded-variable simplex. Columns are laid out as
// [structural | slack | artificial]; every variable has lower bound zero after
// shifting by the original lower bounds.
class Tableau {
public:
    explicit Tableau(const LinearProgram& problem);

    // Returns false when the phase-1 optimum leaves a positive infeasibility.
    bool run_phase_one();
    // Returns false when the program is unbounded.
    bool run_phase_two(const std::vector<double>& objective);

    std::vector<double> structural_values() const;
    std::size_t iterations() const noexcept { return iterations_; }

private:
    enum class Bound : unsigned char { Lower, Upper };

    double& at(std::size_t row, std::size_t col) { return cells_[row * cols_ + col]; }
    double at(std::size_t row, std::size_t col) const { return cells_[row * cols_ + col]; }

    double nonbasic_value(std::size_t col) const {
        return bound_[col] == Bound::Lower ? 0.0 : upper_[col];
    }

    enum class Step { Continue, Optimal, Unbounded };

    void price(const std::vector<double>& cost);
    Step iterate();
    void pivot(std::size_t row, std::size_t col, double entering_value);
    void drive_out_artificials();

    std::size_t rows_{0};
    std::size_t cols_{0};
    std::size_t structural_{0};
    std::size_t first_artificial_{0};
    std::vector<double> cells_;
    std::vector<double> beta_;
    std::vector<double> upper_;
    std::vector<double> reduced_;
    std::vector<std::size_t> basis_;
    std::vector<bool> is_basic_;
    std::vector<Bound> bound_;
    std::vector<bool> may_enter_;
    std::size_t iterations_{0};
};

Tableau::Tableau(const LinearProgram& problem) : structural_(problem.num_vars()) {
    const std::size_t n = structural_;
    const std::size_t m_eq = problem.eq_matrix.size();
    const std::size_t m_ub = problem.ub_matrix.size();
    rows_ = m_eq + m_ub;

    // Shifted and scaled rows: a.y (+ slack) = rhs with y = x - lower.
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    rows.reserve(rows_);
    rhs.reserve(rows_);
    auto push_row = [&](const std::vector<double>& a, double b) {
        double shifted = b;
        for (std::size_t j = 0; j < n; ++j) shifted -= a[j] * problem.lower[j];
        const double scale = row_scale(a);
        std::vector<double> scaled(n);
        for (std::size_t j = 0; j < n; ++j) scaled[j] = a[j] / scale;
        rows.push_back(std::move(scaled));
        rhs.push_back(shifted / scale);
    };
    for (std::size_t i = 0; i < m_eq; ++i) push_row(problem.eq_matrix[i], problem.eq_rhs[i]);
    for (std::size_t i = 0; i < m_ub; ++i) push_row(problem.ub_matrix[i], problem.ub_rhs[i]);

    // Rows whose slack can start basic need no artificial.
    std::vector<bool> needs_artificial(rows_, true);
    for (std::size_t i = 0; i < m_ub; ++i) {
        if (rhs[m_eq + i] >= 0.0) needs_artificial[m_eq + i] = false;
    }
    const auto artificial_count =
        static_cast<std::size_t>(std::count(needs_artificial.begin(), needs_artificial.end(), true));

    first_artificial_ = n + m_ub;
    cols_ = first_artificial_ + artificial_count;
    cells_.assign(rows_ * cols_, 0.0);
    beta_.assign(rows_, 0.0);
    basis_.assign(rows_, 0);
    is_basic_.assign(cols_, false);
    bound_.assign(cols_, Bound::Lower);
    may_enter_.assign(cols_, true);
    upper_.assign(cols_, kInfinity);
    for (std::size_t j = 0; j < n; ++j) {
        upper_[j] = problem.upper[j] - problem.lower[j];
        // Fixed variables never need to move.
        if (upper_[j] <= 0.0) may_enter_[j] = false;
    }

    std::size_t next_artificial = first_artificial_;
    for (std::size_t i = 0; i < rows_; ++i) {
        const double sign = rhs[i] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) at(i, j) = sign * rows[i][j];
        if (i >= m_eq) at(i, n + (i - m_eq)) = sign;
        beta_[i] = sign * rhs[i];
        if (needs_artificial[i]) {
            at(i, next_artificial) = 1.0;
            basis_[i] = next_artificial++;
        } else {
            basis_[i] = n + (i - m_eq);
        }
        is_basic_[basis_[i]] = true;
    }
}

void Tableau::price(const std::vector<double>& cost) {
    reduced_ = cost;
    for (std::size_t i = 0; i < rows_; ++i) {
        const double cb = cost[basis_[i]];
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j < cols_; ++j) reduced_[j] -= cb * at(i, j);
    }
    for (std::size_t i = 0; i < rows_; ++i) reduced_[basis_[i]] = 0.0;
}

void Tableau::pivot(std::size_t row, std::size_t col, double entering_value) {
    const double pivot_value = at(row, col);
    for (std::size_t j = 0; j < cols_; ++j) at(row, j) /= pivot_value;
    at(row, col) = 1.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        if (i == row) continue;
        const double factor = at(i, col);
        if (factor == 0.0) continue;
        for (std::size_t j = 0; j < cols_; ++j) at(i, j) -= factor * at(row, j);
        at(i, col) = 0.0;
    }
    const double rc = reduced_[col];
    if (rc != 0.0) {
        for (std::size_t j = 0; j < cols_; ++j) reduced_[j] -= rc * at(row, j);
    }
    reduced_[col] = 0.0;

    is_basic_[basis_[row]] = false;
    basis_[row] = col;
    is_basic_[col] = true;
    beta_[row] = entering_value;
}

Tableau::Step Tableau::iterate() {
    // Bland: lowest-index improving column.
    std::size_t entering = cols_;
    for (std::size_t j = 0; j < cols_; ++j) {
        if (is_basic_[j] || !may_enter_[j]) continue;
        const double d = reduced_[j];
        if ((bound_[j] == Bound::Lower && d < -kOptimalityTolerance) ||
            (bound_[j] == Bound::Upper && d > kOptimalityTolerance)) {
            entering = j;
            break;
        }
    }
    if (entering == cols_) return Step::Optimal;

    const double direction = bound_[entering] == Bound::Lower ? 1.0 : -1.0;
    double step = upper_[entering];
    std::size_t leaving_row = rows_;
    Bound leaving_bound = Bound::Lower;
    for (std::size_t i = 0; i < rows_; ++i) {
        const double alpha = direction * at(i, entering);
        double limit;
        Bound hits;
        if (alpha > kPivotTolerance) {
            limit = std::max(beta_[i], 0.0) / alpha;
            hits = Bound::Lower;
        } else if (alpha < -kPivotTolerance && std::isfinite(upper_[basis_[i]])) {
            limit = std::max(upper_[basis_[i]] - beta_[i], 0.0) / -alpha;
            hits = Bound::Upper;
        } else {
            continue;
        }
        const bool better = limit < step ||
                            (limit == step && leaving_row != rows_ && basis_[i] < basis_[leaving_row]);
        if (better) {
            step = limit;
            leaving_row = i;
            leaving_bound = hits;
        }
    }
    if (!std::isfinite(step)) return Step::Unbounded;

    ++iterations_;
    if (iterations_ > kIterationLimit) {
        throw std::runtime_error("simplex iteration limit exceeded");
    }

    for (std::size_t i = 0; i < rows_; ++i) {
        beta_[i] -= direction * at(i, entering) * step;
    }
    if (leaving_row == rows_) {
        // Bound flip.
        bound_[entering] = bound_[entering] == Bound::Lower ? Bound::Upper : Bound::Lower;
        return Step::Continue;
    }
    const double entering_value = nonbasic_value(entering) + direction * step;
    const std::size_t leaving = basis_[leaving_row];
    pivot(leaving_row, entering, entering_value);
    bound_[leaving] = leaving_bound;
    return Step::Continue;
}

bool Tableau::run_phase_one() {
    std::vector<double> cost(cols_, 0.0);
    for (std::size_t j = first_artificial_; j < cols_; ++j) cost[j] = 1.0;
    price(cost);
    Step outcome;
    while ((outcome = iterate()) == Step::Continue) {
    }
    if (outcome == Step::Unbounded) {
        // Phase 1 is bounded below by zero; this only happens on numerical breakdown.
        throw std::runtime_error("simplex phase 1 reported an unbounded ray");
    }
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        if (basis_[i] >= first_artificial_) infeasibility += std::abs(beta_[i]);
    }
    if (infeasibility > kFeasibilityTolerance) return false;
    drive_out_artificials();
    return true;
}

void Tableau::drive_out_artificials() {
    for (std::size_t i = 0; i < rows_; ++i) {
        if (basis_[i] < first_artificial_) continue;
        std::size_t replacement = cols_;
        for (std::size_t j = 0; j < first_artificial_; ++j) {
            if (!is_basic_[j] && may_enter_[j] && std::abs(at(i, j)) > kPivotTolerance) {
                replacement = j;
                break;
            }
        }
        if (replacement == cols_) continue;  // redundant row
        const double delta = beta_[i] / at(i, replacement);
        for (std::size_t r = 0; r < rows_; ++r) {
            if (r != i) beta_[r] -= at(r, replacement) * delta;
        }
        const std::size_t leaving = basis_[i];
        pivot(i, replacement, nonbasic_value(replacement) + delta);
        bound_[leaving] = Bound::Lower;
    }
    for (std::size_t j = first_artificial_; j < cols_; ++j) {
        upper_[j] = 0.0;
        may_enter_[j] = false;
    }
}

bool Tableau::run_phase_two(const std::vector<double>& objective) {
    std::vector<double> cost(cols_, 0.0);
    std::copy(objective.begin(), objective.end(), cost.begin());
    price(cost);
    Step outcome;
    while ((outcome = iterate()) == Step::Continue) {
    }
    return outcome == Step::Optimal;
}

std::vector<double> Tableau::structural_values() const {
    std::vector<double> y(structural_);
    for (std::size_t j = 0; j < structural_; ++j) {
        if (!is_basic_[j]) y[j] = nonbasic_value(j);
    }
    for (std::size_t i = 0; i < rows_; ++i) {
        if (basis_[i] < structural_) y[basis_[i]] = beta_[i];
    }
    return y;
}

}  // namespace

std::size_t LinearProgram::add_variable(std::string name, double cost, double lo, double hi) {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    var_names.push_back(std::move(name));
    for (auto& row : eq_matrix) row.push_back(0.0);
    for (auto& row : ub_matrix) row.push_back(0.0);
    return objective.size() - 1;
}

void LinearProgram::add_equality(std::vector<double> row, double rhs) {
    row.resize(num_vars(), 0.0);
    eq_matrix.push_back(std::move(row));
    eq_rhs.push_back(rhs);
}

void LinearProgram::add_inequality(std::vector<double> row, double rhs) {
    row.resize(num_vars(), 0.0);
    ub_matrix.push_back(std::move(row));
    ub_rhs.push_back(rhs);
}

const char* to_string(Status status) noexcept {
    switch (status) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
    }
    return "unknown";
}

std::vector<std::string> validate_lp(const LinearProgram& problem) {
    std::vector<std::string> issues;
    const std::size_t n = problem.num_vars();
    auto complain = [&](auto&&... parts) {
        std::ostringstream out;
        (out << ... << parts);
        issues.push_back(out.str());
    };

    auto check_block = [&](const char* label, const std::vector<std::vector<double>>& matrix,
                           const std::vector<double>& rhs) {
        if (matrix.size() != rhs.size()) {
            complain(label, "_rhs has length ", rhs.size(), " but ", label, "_matrix has ",
                     matrix.size(), " rows");
        }
        for (std::size_t i = 0; i < matrix.size(); ++i) {
            if (matrix[i].size() != n) {
                complain(label, "_matrix row ", i, " has ", matrix[i].size(),
                         " coefficients, expected ", n);
            }
            for (double a : matrix[i]) {
                if (!std::isfinite(a)) {
                    complain(label, "_matrix row ", i, " has a non-finite coefficient");
                    break;
                }
            }
        }
        for (std::size_t i = 0; i < rhs.size(); ++i) {
            if (!std::isfinite(rhs[i])) complain(label, "_rhs[", i, "] is not finite");
        }
    };
    check_block("eq", problem.eq_matrix, problem.eq_rhs);
    check_block("ub", problem.ub_matrix, problem.ub_rhs);

    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(problem.objective[j])) complain("objective[", j, "] is not finite");
    }
    if (problem.lower.size() != n) {
        complain("lower has length ", problem.lower.size(), ", expected ", n);
    }
    if (problem.upper.size() != n) {
        complain("upper has length ", problem.upper.size(), ", expected ", n);
    }
    if (!problem.var_names.empty() && problem.var_names.size() != n) {
        complain("var_names has length ", problem.var_names.size(), ", expected ", n);
    }
    const std::size_t bounded = std::min({n, problem.lower.size(), problem.upper.size()});
    for (std::size_t j = 0; j < bounded; ++j) {
        const double lo = problem.lower[j];
        const double hi = problem.upper[j];
        if (!std::isfinite(lo)) complain("lower[", j, "] must be finite");
        if (std::isnan(hi) || hi == -kInfinity) complain("upper[", j, "] is invalid");
        if (lo > hi) complain("crossed bounds on variable ", j, ": lower ", lo, " > upper ", hi);
    }
    return issues;
}

LpSolution solve_lp(const LinearProgram& problem) {
    if (auto issues = validate_lp(problem); !issues.empty()) {
        std::string message = "invalid linear program:";
        for (const auto& issue : issues) message += " " + issue + ";";
        throw LpValidationError(message);
    }

    LpSolution solution;
    Tableau tableau(problem);
    if (!tableau.run_phase_one()) {
        solution.status = Status::Infeasible;
        solution.iterations = tableau.iterations();
        return solution;
    }
    if (!tableau.run_phase_two(problem.objective)) {
        solution.status = Status::Unbounded;
        solution.iterations = tableau.iterations();
        return solution;
    }

    const auto shifted = tableau.structural_values();
    solution.point.resize(problem.num_vars());
    for (std::size_t j = 0; j < problem.num_vars(); ++j) {
        // Clip roundoff outside the box.
        const double x = problem.lower[j] + shifted[j];
        solution.point[j] = std::clamp(x, problem.lower[j], problem.upper[j]);
    }
    solution.objective_value = 0.0;
    for (std::size_t j = 0; j < problem.num_vars(); ++j) {
        solution.objective_value += problem.objective[j] * solution.point[j];
    }
    solution.status = Status::Optimal;
    solution.iterations = tableau.iterations();
    return solution;
}

double max_violation(const LinearProgram& problem, const std::vector<double>& point) {
    double worst = 0.0;
    auto activity = [&](const std::vector<double>& row) {
        double sum = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) sum += row[j] * point[j];
        return sum;
    };
    for (std::size_t i = 0; i < problem.eq_matrix.size(); ++i) {
        const auto& row = problem.eq_matrix[i];
        worst = std::max(worst, std::abs(activity(row) - problem.eq_rhs[i]) / row_scale(row));
    }
    for (std::size_t i = 0; i < problem.ub_matrix.size(); ++i) {
        const auto& row = problem.ub_matrix[i];
        worst = std::max(worst, (activity(row) - problem.ub_rhs[i]) / row_scale(row));
    }
    for (std::size_t j = 0; j < point.size(); ++j) {
        worst = std::max({worst, problem.lower[j] - point[j], point[j] - problem.upper[j]});
    }
    return worst;
}

}  // namespace coalctl::lp
