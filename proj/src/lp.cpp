#include "relex/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace relex {

namespace {

constexpr double kPivotTol = 1e-11;

class Tableau {
 public:
  Tableau(Index rows, Index cols) : t_(MatrixXd::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  Index rows() const { return t_.rows() - 1; }
  Index cols() const { return t_.cols() - 1; }

  double &at(Index r, Index c) { return t_(r, c); }
  double &rhs(Index r) { return t_(r, cols()); }
  double &cost(Index c) { return t_(rows(), c); }
  double objective() const { return t_(rows(), cols()); }
  std::vector<Index> &basis() { return basis_; }

  void pivot(Index r, Index c) {
    t_.row(r) /= t_(r, c);
    for (Index i = 0; i <= rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) {
        t_.row(i) -= t_(i, c) * t_.row(r);
      }
    }
    basis_[r] = c;
  }

  // Objective row holds -c_j for maximization, then basic columns are
  // eliminated so the row carries reduced costs.
  void set_objective(const VectorXd &c) {
    t_.row(rows()).setZero();
    for (Index j = 0; j < c.size(); ++j) {
      t_(rows(), j) = -c(j);
    }
    for (Index r = 0; r < rows(); ++r) {
      const Index j = basis_[r];
      if (t_(rows(), j) != 0.0) {
        t_.row(rows()) -= t_(rows(), j) * t_.row(r);
      }
    }
  }

  // Runs simplex iterations; columns >= `allowed` never enter.
  LpStatus run(Index allowed, int &budget) {
    while (budget-- > 0) {
      Index enter = -1;
      for (Index j = 0; j < allowed; ++j) {
        if (t_(rows(), j) < -1e-10) {
          enter = j;
          break;
        }
      }
      if (enter < 0) {
        return LpStatus::kOptimal;
      }
      Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index r = 0; r < rows(); ++r) {
        const double a = t_(r, enter);
        if (a > kPivotTol) {
          const double ratio = t_(r, cols()) / a;
          if (ratio < best - 1e-12 ||
              (std::abs(ratio - best) <= 1e-12 && leave >= 0 &&
               basis_[r] < basis_[leave])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) {
        return LpStatus::kUnbounded;
      }
      pivot(leave, enter);
    }
    return LpStatus::kIterationLimit;
  }

 private:
  MatrixXd t_;
  std::vector<Index> basis_;
};

}  // namespace

LpResult solve_lp(const LinearProgram &lp, int max_iterations) {
  const Index m = lp.A.rows();
  const Index n = lp.A.cols();
  if (lp.b.size() != m || lp.c.size() != n ||
      (!lp.free_vars.empty() && static_cast<Index>(lp.free_vars.size()) != n)) {
    throw std::invalid_argument("solve_lp: inconsistent dimensions");
  }

  // Split free variables into positive and negative parts.
  std::vector<Index> neg_col(n, -1);
  Index n_split = n;
  for (Index j = 0; j < n; ++j) {
    if (!lp.free_vars.empty() && lp.free_vars[j]) {
      neg_col[j] = n_split++;
    }
  }
  Index n_art = 0;
  for (Index i = 0; i < m; ++i) {
    if (lp.b(i) < 0.0) {
      ++n_art;
    }
  }
  const Index slack0 = n_split;
  const Index art0 = slack0 + m;
  Tableau tab(m, art0 + n_art);

  Index art = art0;
  for (Index i = 0; i < m; ++i) {
    const double sign = lp.b(i) < 0.0 ? -1.0 : 1.0;
    for (Index j = 0; j < n; ++j) {
      tab.at(i, j) = sign * lp.A(i, j);
      if (neg_col[j] >= 0) {
        tab.at(i, neg_col[j]) = -sign * lp.A(i, j);
      }
    }
    tab.at(i, slack0 + i) = sign;
    tab.rhs(i) = sign * lp.b(i);
    if (sign < 0.0) {
      tab.at(i, art) = 1.0;
      tab.basis()[i] = art++;
    } else {
      tab.basis()[i] = slack0 + i;
    }
  }

  int budget = max_iterations;
  LpResult result;
  if (n_art > 0) {
    VectorXd phase1 = VectorXd::Zero(art0 + n_art);
    phase1.tail(n_art).setConstant(-1.0);
    tab.set_objective(phase1);
    const LpStatus status = tab.run(art0 + n_art, budget);
    if (status == LpStatus::kIterationLimit) {
      result.status = status;
      return result;
    }
    const double scale = 1.0 + lp.b.cwiseAbs().maxCoeff();
    if (tab.objective() < -1e-9 * scale) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive remaining (zero-level) artificials out of the basis.
    for (Index r = 0; r < m; ++r) {
      if (tab.basis()[r] >= art0) {
        for (Index j = 0; j < art0; ++j) {
          if (std::abs(tab.at(r, j)) > 1e-9) {
            tab.pivot(r, j);
            break;
          }
        }
      }
    }
  }

  VectorXd phase2 = VectorXd::Zero(art0 + n_art);
  for (Index j = 0; j < n; ++j) {
    phase2(j) = lp.c(j);
    if (neg_col[j] >= 0) {
      phase2(neg_col[j]) = -lp.c(j);
    }
  }
  tab.set_objective(phase2);
  result.status = tab.run(art0, budget);
  if (result.status != LpStatus::kOptimal) {
    return result;
  }

  VectorXd split = VectorXd::Zero(art0 + n_art);
  for (Index r = 0; r < m; ++r) {
    split(tab.basis()[r]) = tab.rhs(r);
  }
  result.y = split.head(n);
  for (Index j = 0; j < n; ++j) {
    if (neg_col[j] >= 0) {
      result.y(j) -= split(neg_col[j]);
    }
  }
  result.value = lp.c.dot(result.y);
  return result;
}

}  // namespace relex
