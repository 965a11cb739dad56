#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace coalctl::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline constexpr double kPivotTolerance = 1e-10;
inline constexpr double kFeasibilityTolerance = 1e-8;

// Canonical form:
//   minimize    objective . x
//   subject to  eq_matrix x  = eq_rhs
//               ub_matrix x <= ub_rhs
//               lower <= x <= upper
// Lower bounds must be finite; upper bounds may be kInfinity.
struct LinearProgram {
    std::vector<double> objective;
    std::vector<std::vector<double>> eq_matrix;
    std::vector<double> eq_rhs;
    std::vector<std::vector<double>> ub_matrix;
    std::vector<double> ub_rhs;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::string> var_names;

    std::size_t num_vars() const noexcept { return objective.size(); }

    // Appends a variable and returns its column index. Existing rows are
    // padded with a zero coefficient.
    std::size_t add_variable(std::string name, double cost, double lo, double hi);

    void add_equality(std::vector<double> row, double rhs);
    void add_inequality(std::vector<double> row, double rhs);
};

enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status status) noexcept;

struct LpSolution {
    Status status{Status::Infeasible};
    std::vector<double> point;
    double objective_value{0.0};
    std::size_t iterations{0};
};

class LpValidationError : public std::invalid_argument {
public:
    explicit LpValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Returns one human-readable entry per violated structural invariant.
std::vector<std::string> validate_lp(const LinearProgram& problem);

// Dense two-phase bounded-variable simplex with Bland's rule.
// Throws LpValidationError when validate_lp reports any violation.
LpSolution solve_lp(const LinearProgram& problem);

// Largest violation of any constraint or bound at `point`, measured on rows
// scaled by their largest absolute coefficient.
double max_violation(const LinearProgram& problem, const std::vector<double>& point);

}  // namespace coalctl::lp
