#pragma once

// Convex QCQP solver: minimize f0(x) subject to f_i(x) <= 0 and x_j > 0 on a
// mask, where every f is x'Qx + c'x + r with Q symmetric positive
// semidefinite. Primal log-barrier, damped Newton, slack-minimizing phase 1.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rsofdm/waveform.hpp"

namespace rsofdm {

struct QuadraticForm {
  RMatrix q;       // dense symmetric part; empty means `q_diag` is used
  RVector q_diag;  // diagonal part when `q` is empty
  RVector c;
  double r = 0.0;

  static QuadraticForm dense(RMatrix q, RVector c, double r);
  static QuadraticForm diagonal(RVector q_diag, RVector c, double r);
  /// All-zero form of dimension d in diagonal storage.
  static QuadraticForm zero(int d);

  int dim() const { return static_cast<int>(c.size()); }
  bool is_diagonal() const { return q.size() == 0; }
  double value(const RVector& x) const;
  RVector gradient(const RVector& x) const;
  RMatrix dense_q() const;
  QuadraticForm& operator+=(const QuadraticForm& other);
};

class QcqpProblem {
 public:
  /// Throws InvalidDimension on shape mismatch and InvalidInput when any
  /// quadratic part is not positive semidefinite.
  QcqpProblem(QuadraticForm objective, std::vector<QuadraticForm> constraints,
              std::vector<bool> nonneg = {}, std::vector<std::string> names = {});

  int dim() const { return objective_.dim(); }
  const QuadraticForm& objective() const { return objective_; }
  const std::vector<QuadraticForm>& constraints() const { return constraints_; }
  const std::vector<bool>& nonneg() const { return nonneg_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  bool all_diagonal() const;

 private:
  QuadraticForm objective_;
  std::vector<QuadraticForm> constraints_;
  std::vector<bool> nonneg_;
  std::vector<std::string> names_;
};

struct QcqpOptions {
  double kkt_tol = 1e-7;
  double feas_tol = 1e-8;
  double mu_initial = 1.0;
  double mu_factor = 10.0;
  double mu_final = 1e-9;
  int max_newton = 100;  // per barrier level
};

enum class QcqpStatus { optimal, infeasible, max_iter };
std::string to_string(QcqpStatus status);

struct QcqpSolution {
  RVector x;
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;  // Newton steps, phase 1 included
  QcqpStatus status = QcqpStatus::max_iter;
  RVector multipliers;  // one per constraint
  int violated = -1;    // most violated constraint when infeasible
};

/// KKT residual of (x, lambda, nu): max of stationarity (inf-norm of
/// grad f0 + sum lambda_i grad f_i - nu), complementarity and primal
/// infeasibility. nu is taken as mu / x on masked entries.
double kkt_residual(const QcqpProblem& problem, const RVector& x, const RVector& lambda,
                    double mu);

QcqpSolution solve(const QcqpProblem& problem, const std::optional<RVector>& warm_start = {},
                   const QcqpOptions& opts = {});

/// Plain-text dump: a line "qcqp <dim> <constraints>", a mask line, then for
/// the objective and each constraint the dense Q row-major (dim lines), the
/// linear term (one line) and the constant (one line).
void write_problem(std::ostream& out, const QcqpProblem& problem);
QcqpProblem read_problem(std::istream& in);

}  // namespace rsofdm
