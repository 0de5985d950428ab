#ifndef RELEX_LP_HPP_
#define RELEX_LP_HPP_

#include <vector>

#include "relex/types.hpp"

namespace relex {

/// maximize c.y  subject to  A y <= b,  y_j >= 0 unless free_vars[j].
struct LinearProgram {
  MatrixXd A;
  VectorXd b;
  VectorXd c;
  std::vector<bool> free_vars;  // empty means all variables are sign-constrained
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  double value = 0.0;
  VectorXd y;
};

/// Dense two-phase simplex with Bland's rule. Meant for the small programs
/// in this library (tens of constraints).
LpResult solve_lp(const LinearProgram &lp, int max_iterations = 20000);

}  // namespace relex

#endif  // RELEX_LP_HPP_
