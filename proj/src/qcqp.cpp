#include "rsofdm/qcqp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>

#include <Eigen/Cholesky>

#include "rsofdm/errors.hpp"

namespace rsofdm {

QuadraticForm QuadraticForm::dense(RMatrix q, RVector c, double r) {
  if (q.rows() != q.cols() || q.rows() != c.size()) throw InvalidDimension("quadratic form shape mismatch");
  QuadraticForm f;
  f.q = std::move(q);
  f.c = std::move(c);
  f.r = r;
  return f;
}

QuadraticForm QuadraticForm::diagonal(RVector q_diag, RVector c, double r) {
  if (q_diag.size() != c.size()) throw InvalidDimension("quadratic form shape mismatch");
  QuadraticForm f;
  f.q_diag = std::move(q_diag);
  f.c = std::move(c);
  f.r = r;
  return f;
}

QuadraticForm QuadraticForm::zero(int d) { return diagonal(RVector::Zero(d), RVector::Zero(d), 0.0); }

double QuadraticForm::value(const RVector& x) const {
  const double quad = is_diagonal() ? x.cwiseAbs2().dot(q_diag) : x.dot(q * x);
  return quad + c.dot(x) + r;
}

RVector QuadraticForm::gradient(const RVector& x) const {
  if (is_diagonal()) return 2.0 * q_diag.cwiseProduct(x) + c;
  return 2.0 * (q * x) + c;
}

RMatrix QuadraticForm::dense_q() const {
  if (is_diagonal()) return q_diag.asDiagonal();
  return q;
}

QuadraticForm& QuadraticForm::operator+=(const QuadraticForm& other) {
  if (other.dim() != dim()) throw InvalidDimension("quadratic form shape mismatch");
  if (is_diagonal() && other.is_diagonal()) {
    q_diag += other.q_diag;
  } else {
    q = dense_q() + other.dense_q();
    q_diag.resize(0);
  }
  c += other.c;
  r += other.r;
  return *this;
}

namespace {

void check_convex(const QuadraticForm& f, const std::string& what) {
  if (!f.c.allFinite() || !std::isfinite(f.r)) throw InvalidInput(what + " has non-finite entries");
  if (f.is_diagonal()) {
    if (!f.q_diag.allFinite() || (f.q_diag.array() < 0.0).any()) {
      throw InvalidInput(what + " is not convex");
    }
    return;
  }
  if (!f.q.allFinite()) throw InvalidInput(what + " has non-finite entries");
  const double scale = std::max(1.0, f.q.cwiseAbs().maxCoeff());
  if ((f.q - f.q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidInput(what + " has a non-symmetric quadratic part");
  }
  // LDLT flags rank-deficient PSD matrices as failures once roundoff enters,
  // so look at the spectrum instead.
  const Eigen::SelfAdjointEigenSolver<RMatrix> eig(f.q, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw InvalidInput(what + " is not convex");
  }
}

}  // namespace

QcqpProblem::QcqpProblem(QuadraticForm objective, std::vector<QuadraticForm> constraints,
                         std::vector<bool> nonneg, std::vector<std::string> names)
    : objective_(std::move(objective)),
      constraints_(std::move(constraints)),
      nonneg_(std::move(nonneg)),
      names_(std::move(names)) {
  const int d = objective_.dim();
  if (d < 1) throw InvalidDimension("problem needs at least one variable");
  if (nonneg_.empty()) nonneg_.assign(d, false);
  if (static_cast<int>(nonneg_.size()) != d) throw InvalidDimension("mask length mismatch");
  if (names_.empty()) {
    for (std::size_t i = 0; i < constraints_.size(); ++i) names_.push_back("constraint " + std::to_string(i));
  }
  if (names_.size() != constraints_.size()) throw InvalidDimension("one name per constraint expected");
  check_convex(objective_, "objective");
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    if (constraints_[i].dim() != d) throw InvalidDimension("constraint dimension mismatch");
    check_convex(constraints_[i], names_[i]);
  }
}

bool QcqpProblem::all_diagonal() const {
  if (!objective_.is_diagonal()) return false;
  return std::all_of(constraints_.begin(), constraints_.end(),
                     [](const QuadraticForm& f) { return f.is_diagonal(); });
}

std::string to_string(QcqpStatus status) {
  switch (status) {
    case QcqpStatus::optimal:
      return "optimal";
    case QcqpStatus::infeasible:
      return "infeasible";
    case QcqpStatus::max_iter:
      return "max_iter";
  }
  return "unknown";
}

double kkt_residual(const QcqpProblem& problem, const RVector& x, const RVector& lambda,
                    double mu) {
  const auto& cons = problem.constraints();
  if (lambda.size() != static_cast<Eigen::Index>(cons.size())) throw InvalidDimension("one multiplier per constraint");
  RVector grad = problem.objective().gradient(x);
  double comp = 0.0;
  double infeas = 0.0;
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const double fi = cons[i].value(x);
    grad += lambda[i] * cons[i].gradient(x);
    comp = std::max(comp, std::abs(lambda[i] * fi));
    infeas = std::max({infeas, fi, -lambda[i]});
  }
  for (int j = 0; j < problem.dim(); ++j) {
    if (!problem.nonneg()[j]) continue;
    infeas = std::max(infeas, -x[j]);
    if (x[j] > 0.0) {
      const double nu = mu / x[j];
      grad[j] -= nu;
      comp = std::max(comp, nu * x[j]);
    }
  }
  return std::max({grad.cwiseAbs().maxCoeff(), comp, infeas});
}

namespace {

class BarrierSolver {
 public:
  BarrierSolver(const QcqpProblem& p, const QcqpOptions& o) : p_(p), o_(o) {
    for (int j = 0; j < p.dim(); ++j) {
      if (p.nonneg()[j]) masked_.push_back(j);
    }
    diagonal_ = p.all_diagonal();
  }

  bool strictly_feasible(const RVector& x, RVector* fvals = nullptr, double margin = 0.0) const {
    for (int j : masked_) {
      if (!(x[j] > 0.0)) return false;
    }
    const auto& cons = p_.constraints();
    if (fvals) fvals->resize(static_cast<Eigen::Index>(cons.size()));
    for (std::size_t i = 0; i < cons.size(); ++i) {
      const double fi = cons[i].value(x);
      if (!(fi < -margin)) return false;
      if (fvals) (*fvals)[i] = fi;
    }
    return true;
  }

  double merit(const RVector& x, double mu, const RVector& fvals) const {
    double b = 0.0;
    for (Eigen::Index i = 0; i < fvals.size(); ++i) b -= std::log(-fvals[i]);
    for (int j : masked_) b -= std::log(x[j]);
    return p_.objective().value(x) + mu * b;
  }

  RVector barrier_gradient(const RVector& x, double mu, const RVector& fvals,
                           std::vector<RVector>& grads) const {
    const auto& cons = p_.constraints();
    RVector g = p_.objective().gradient(x);
    grads.resize(cons.size());
    for (std::size_t i = 0; i < cons.size(); ++i) {
      grads[i] = cons[i].gradient(x);
      g += (mu / -fvals[i]) * grads[i];
    }
    for (int j : masked_) g[j] -= mu / x[j];
    return g;
  }

  RVector newton_direction(const RVector& x, double mu, const RVector& fvals,
                           const std::vector<RVector>& grads, const RVector& g,
                           bool force_dense = false) const {
    const auto& cons = p_.constraints();
    const int n = p_.dim();
    const int m = static_cast<int>(cons.size());
    RVector w(m);
    for (int i = 0; i < m; ++i) w[i] = mu / (fvals[i] * fvals[i]);

    if (diagonal_ && !force_dense) {
      RVector d = 2.0 * p_.objective().q_diag;
      for (int i = 0; i < m; ++i) d += (2.0 * mu / -fvals[i]) * cons[i].q_diag;
      for (int j : masked_) d[j] += mu / (x[j] * x[j]);
      if (d.minCoeff() > 1e-14 * std::max(1.0, d.maxCoeff())) {
        RMatrix a(n, m);
        for (int i = 0; i < m; ++i) a.col(i) = grads[i];
        const RVector dinv = d.cwiseInverse();
        const RMatrix z = dinv.asDiagonal() * a;
        RMatrix s = a.transpose() * z;
        s.diagonal() += w.cwiseInverse();
        const Eigen::LDLT<RMatrix> small(s);
        const auto apply_inverse = [&](const RVector& b) -> RVector {
          const RVector y = dinv.cwiseProduct(b);
          if (m == 0) return y;
          return y - z * small.solve(a.transpose() * y);
        };
        const auto apply = [&](const RVector& v) -> RVector {
          RVector out = d.cwiseProduct(v);
          if (m > 0) out += a * w.cwiseProduct(a.transpose() * v);
          return out;
        };
        // Iterative refinement: the rank-one barrier terms can dwarf D near
        // the boundary, which costs the plain Woodbury solve many digits.
        const RVector b = -g;
        const double bnorm = b.cwiseAbs().maxCoeff();
        RVector dx = apply_inverse(b);
        double res = (b - apply(dx)).cwiseAbs().maxCoeff();
        for (int sweep = 0; sweep < 5 && res > 1e-13 * bnorm; ++sweep) {
          const RVector next = dx + apply_inverse(b - apply(dx));
          const double next_res = (b - apply(next)).cwiseAbs().maxCoeff();
          if (!(next_res < res)) break;
          dx = next;
          res = next_res;
        }
        if (dx.allFinite() && res <= 1e-6 * bnorm) return dx;
      }
    }

    RMatrix h = 2.0 * p_.objective().dense_q();
    for (int i = 0; i < m; ++i) {
      h += (2.0 * mu / -fvals[i]) * cons[i].dense_q();
      h += w[i] * grads[i] * grads[i].transpose();
    }
    for (int j : masked_) h(j, j) += mu / (x[j] * x[j]);
    double reg = 0.0;
    const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 12; ++attempt) {
      RMatrix hr = h;
      hr.diagonal().array() += reg;
      Eigen::LDLT<RMatrix> ldlt(hr);
      if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
        RVector dx = ldlt.solve(-g);
        if (dx.allFinite()) return dx;
      }
      reg = reg == 0.0 ? 1e-12 * scale : reg * 10.0;
    }
    return -g;
  }

  /// Minimizes f0 + mu * barrier from a strictly feasible x. Returns the
  /// number of Newton steps; sets `stopped` when `stop(x)` fired.
  int center(RVector& x, double mu, const std::function<bool(const RVector&)>& stop,
             bool& stopped) const {
    RVector fvals;
    std::vector<RVector> grads;
    strictly_feasible(x, &fvals);
    double f = merit(x, mu, fvals);
    const double gtol = 0.05 * o_.kkt_tol;
    double best_g = std::numeric_limits<double>::infinity();
    double best_f = f;
    int stalled = 0;
    int it = 0;
    for (; it < o_.max_newton; ++it) {
      if (stop && stop(x)) {
        stopped = true;
        return it;
      }
      const RVector g = barrier_gradient(x, mu, fvals, grads);
      const double gnorm = g.cwiseAbs().maxCoeff();
      if (gnorm <= gtol) break;
      // Rounding floor: neither the gradient nor the merit improves.
      if (gnorm < 0.5 * best_g || f < best_f - 1e-12 * (1.0 + std::abs(best_f))) {
        best_g = std::min(best_g, gnorm);
        best_f = std::min(best_f, f);
        stalled = 0;
      } else if (++stalled >= 5) {
        break;
      }
      bool accepted = false;
      for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
        // A short step from the structured solve usually means it lost
        // accuracy; retry once with the dense factorization.
        const bool dense = attempt == 1;
        if (dense && !diagonal_) break;
        const RVector dx = newton_direction(x, mu, fvals, grads, g, dense);
        const double slope = g.dot(dx);
        if (!(slope < 0.0)) continue;

        double t = 1.0;
        for (int j : masked_) {
          if (dx[j] < 0.0) t = std::min(t, 0.99 * x[j] / -dx[j]);
        }
        RVector trial;
        RVector tf;
        for (int ls = 0; ls < 80; ++ls) {
          trial = x + t * dx;
          if (strictly_feasible(trial, &tf) && (tf.array() <= 0.01 * fvals.array()).all()) {
            const double ft = merit(trial, mu, tf);
            bool ok = ft <= f + 0.25 * t * slope;
            if (!ok && ft <= f + 1e-13 * (1.0 + std::abs(f))) {
              // Merit differences are lost in rounding here; fall back to
              // requiring a smaller gradient.
              std::vector<RVector> tg;
              ok = barrier_gradient(trial, mu, tf, tg).cwiseAbs().maxCoeff() < 0.9 * gnorm;
            }
            if (ok) {
              if (!dense && diagonal_ && t < 1e-3) break;
              accepted = true;
              x = trial;
              fvals = tf;
              f = ft;
              break;
            }
          }
          t *= 0.5;
        }
      }
      if (!accepted) break;
    }
    return it;
  }

  const std::vector<int>& masked() const { return masked_; }

 private:
  const QcqpProblem& p_;
  const QcqpOptions& o_;
  std::vector<int> masked_;
  bool diagonal_ = false;
};

// Least-squares multipliers on the near-active constraints. The barrier
// estimate mu / -f_i inherits the cancellation error of f_i close to the
// boundary; the stationarity system itself does not.
RVector polish_multipliers(const QcqpProblem& p, const RVector& x, const RVector& lambda,
                           double mu) {
  const auto& cons = p.constraints();
  std::vector<int> active;
  for (std::size_t i = 0; i < cons.size(); ++i) {
    if (lambda[i] > 1e-6 * std::max(1.0, lambda.maxCoeff())) active.push_back(static_cast<int>(i));
  }
  if (active.empty()) return lambda;
  RVector rhs = -p.objective().gradient(x);
  for (std::size_t i = 0; i < cons.size(); ++i) {
    if (std::find(active.begin(), active.end(), static_cast<int>(i)) == active.end()) {
      rhs -= lambda[i] * cons[i].gradient(x);
    }
  }
  for (int j = 0; j < p.dim(); ++j) {
    if (p.nonneg()[j] && x[j] > 0.0) rhs[j] += mu / x[j];
  }
  RMatrix a(p.dim(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t i = 0; i < active.size(); ++i) a.col(i) = cons[active[i]].gradient(x);
  const RVector sol = a.colPivHouseholderQr().solve(rhs);
  RVector out = lambda;
  for (std::size_t i = 0; i < active.size(); ++i) out[active[i]] = std::max(sol[i], 0.0);
  return out;
}

QuadraticForm extend(const QuadraticForm& f, double slack_coef) {
  const int d = f.dim();
  RVector c(d + 1);
  c << f.c, slack_coef;
  if (f.is_diagonal()) {
    RVector qd(d + 1);
    qd << f.q_diag, 0.0;
    return QuadraticForm::diagonal(qd, c, f.r);
  }
  RMatrix q = RMatrix::Zero(d + 1, d + 1);
  q.topLeftCorner(d, d) = f.q;
  return QuadraticForm::dense(q, c, f.r);
}

}  // namespace

QcqpSolution solve(const QcqpProblem& problem, const std::optional<RVector>& warm_start,
                   const QcqpOptions& opts) {
  const int n = problem.dim();
  const auto& raw = problem.constraints();
  const std::size_t m = raw.size();

  // Work on constraints normalized to unit scale; margins and phase-1
  // thresholds are then relative. Multipliers are mapped back at the end.
  RVector scale(static_cast<Eigen::Index>(m));
  std::vector<QuadraticForm> cons;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < m; ++i) {
    const QuadraticForm& f = raw[i];
    double sc = std::max({1.0, std::abs(f.r), f.c.cwiseAbs().maxCoeff(),
                          f.is_diagonal() ? f.q_diag.cwiseAbs().maxCoeff() : f.q.cwiseAbs().maxCoeff()});
    scale[i] = sc;
    QuadraticForm g = f;
    g.q *= 1.0 / sc;
    g.q_diag *= 1.0 / sc;
    g.c *= 1.0 / sc;
    g.r /= sc;
    cons.push_back(std::move(g));
    names.push_back(problem.name(i));
  }
  const QcqpProblem scaled(problem.objective(), cons, problem.nonneg(), names);
  BarrierSolver solver(scaled, opts);
  QcqpSolution sol;

  RVector x = RVector::Zero(n);
  if (warm_start) {
    if (warm_start->size() != n) throw InvalidDimension("warm start has the wrong dimension");
    x = *warm_start;
  }
  if (!x.allFinite()) throw InvalidInput("warm start has non-finite entries");

  constexpr double kMargin = 1e-6;
  const double floor = 1e-4 * (1.0 + x.cwiseAbs().maxCoeff());
  for (int j : solver.masked()) x[j] = std::max(x[j], floor);

  if (!solver.strictly_feasible(x, nullptr, kMargin)) {
    // Phase 1: minimize s subject to f_i(x) <= s and s >= -1, written in
    // t = s + 1 >= 0 so the slack gets a barrier of its own.
    std::vector<QuadraticForm> pc;
    std::vector<std::string> pnames;
    double s0 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      QuadraticForm f = extend(cons[i], -1.0);
      f.r += 1.0;
      pc.push_back(std::move(f));
      pnames.push_back(names[i]);
      s0 = std::max(s0, cons[i].value(x));
    }
    RVector obj_c = RVector::Zero(n + 1);
    obj_c[n] = 1.0;
    std::vector<bool> mask = problem.nonneg();
    mask.push_back(true);
    const QcqpProblem phase1(QuadraticForm::diagonal(RVector::Zero(n + 1), obj_c, 0.0), pc, mask,
                             pnames);

    BarrierSolver s1(phase1, opts);
    RVector z(n + 1);
    z << x, s0 + 2.0;
    const auto stop = [n](const RVector& v) { return v[n] < 1.0 - 10.0 * kMargin; };
    bool stopped = false;
    for (double mu = opts.mu_initial; !stopped && mu >= opts.mu_final; mu /= opts.mu_factor) {
      sol.iterations += s1.center(z, mu, stop, stopped);
    }
    const RVector x0 = x;
    x = z.head(n);
    if (solver.strictly_feasible(x)) {
      // Phase 1 overshoots freely; pull back along the segment towards the
      // start while every constraint keeps half the slack found.
      const auto worst = [&](const RVector& v) {
        double w = -std::numeric_limits<double>::infinity();
        for (const QuadraticForm& f : cons) w = std::max(w, f.value(v));
        return w;
      };
      const double target = 0.5 * worst(x);
      double lo = 0.0;
      double hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (worst(x0 + mid * (x - x0)) <= target ? hi : lo) = mid;
      }
      x = x0 + hi * (x - x0);
    }
    if (!solver.strictly_feasible(x)) {
      sol.status = QcqpStatus::infeasible;
      sol.x = x;
      double worst = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        const double fi = cons[i].value(x);
        if (fi > worst) {
          worst = fi;
          sol.violated = static_cast<int>(i);
        }
      }
      sol.objective_value = problem.objective().value(x);
      sol.multipliers = RVector::Zero(static_cast<Eigen::Index>(m));
      sol.kkt_residual = std::numeric_limits<double>::infinity();
      return sol;
    }
  }

  double mu = opts.mu_initial;
  bool unused = false;
  while (true) {
    sol.iterations += solver.center(x, mu, nullptr, unused);
    if (mu <= opts.mu_final) break;
    mu = std::max(mu / opts.mu_factor, opts.mu_final);
  }

  sol.x = x;
  sol.objective_value = problem.objective().value(x);
  sol.multipliers.resize(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) sol.multipliers[i] = mu / -cons[i].value(x) / scale[i];
  sol.kkt_residual = kkt_residual(problem, x, sol.multipliers, mu);
  if (m > 0) {
    const RVector polished = polish_multipliers(problem, x, sol.multipliers, mu);
    const double r = kkt_residual(problem, x, polished, mu);
    if (r < sol.kkt_residual) {
      sol.multipliers = polished;
      sol.kkt_residual = r;
    }
  }
  sol.status = sol.kkt_residual <= opts.kkt_tol ? QcqpStatus::optimal : QcqpStatus::max_iter;
  return sol;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

void write_form(std::ostream& out, const QuadraticForm& f) {
  const RMatrix q = f.dense_q();
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) out << (j ? " " : "") << q(i, j);
    out << '\n';
  }
  for (Eigen::Index j = 0; j < f.c.size(); ++j) out << (j ? " " : "") << f.c[j];
  out << '\n' << f.r << '\n';
}

QuadraticForm read_form(std::istream& in, int d) {
  RMatrix q(d, d);
  RVector c(d);
  double r = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (!(in >> q(i, j))) throw InvalidInput("truncated problem file");
    }
  }
  for (int j = 0; j < d; ++j) {
    if (!(in >> c[j])) throw InvalidInput("truncated problem file");
  }
  if (!(in >> r)) throw InvalidInput("truncated problem file");
  RMatrix off = q;
  off.diagonal().setZero();
  if (off.isZero(0.0)) return QuadraticForm::diagonal(q.diagonal(), c, r);
  return QuadraticForm::dense(q, c, r);
}

}  // namespace

void write_problem(std::ostream& out, const QcqpProblem& problem) {
  const auto old = out.precision(17);
  out << "qcqp " << problem.dim() << ' ' << problem.constraints().size() << '\n';
  for (int j = 0; j < problem.dim(); ++j) out << (j ? " " : "") << (problem.nonneg()[j] ? 1 : 0);
  out << '\n';
  write_form(out, problem.objective());
  for (const QuadraticForm& f : problem.constraints()) write_form(out, f);
  out.precision(old);
}

QcqpProblem read_problem(std::istream& in) {
  std::string tag;
  int d = 0;
  int m = 0;
  if (!(in >> tag >> d >> m) || tag != "qcqp" || d < 1 || m < 0) {
    throw InvalidInput("not a qcqp problem file");
  }
  std::vector<bool> mask(d);
  for (int j = 0; j < d; ++j) {
    int v = 0;
    if (!(in >> v)) throw InvalidInput("truncated problem file");
    mask[j] = v != 0;
  }
  QuadraticForm obj = read_form(in, d);
  std::vector<QuadraticForm> cons;
  for (int i = 0; i < m; ++i) cons.push_back(read_form(in, d));
  return QcqpProblem(std::move(obj), std::move(cons), std::move(mask));
}

}  // namespace rsofdm
