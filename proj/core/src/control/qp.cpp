#include "phtmpc/control/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>

namespace phtmpc {

void QpProblem::validate() const {
  const auto n = g.size();
  if (H.rows() != n || H.cols() != n) throw std::invalid_argument("qp: H must be n x n");
  if (E.rows() != f.size() || (E.rows() > 0 && E.cols() != n)) throw std::invalid_argument("qp: E/f mismatch");
  if (C.rows() != d.size() || (C.rows() > 0 && C.cols() != n)) throw std::invalid_argument("qp: C/d mismatch");
  if (rho.size() != d.size()) throw std::invalid_argument("qp: rho must have one entry per inequality");
  if ((rho.array() < 0.0).any()) throw std::invalid_argument("qp: negative slack penalty");
  if (!g.allFinite() || !f.allFinite() || !d.allFinite()) throw std::invalid_argument("qp: non-finite data");
}

std::string to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::MaxIterations: return "max-iterations";
    case QpStatus::InfeasibleHard: return "infeasible-hard";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, primal_eq, primal_ineq, dual, complementarity});
}

double qp_objective(const QpProblem& qp, const VecX& z, const VecX& slack) {
  return 0.5 * z.dot(qp.H * z) + qp.g.dot(z) + qp.rho.dot(slack);
}

KktResiduals kkt_residuals(const QpProblem& qp, const VecX& z, const VecX& y, const VecX& lambda, const VecX& slack) {
  KktResiduals r;
  VecX stat = qp.H * z + qp.g;
  if (qp.num_eq() > 0) stat -= qp.E.transpose() * y;
  if (qp.num_ineq() > 0) stat -= qp.C.transpose() * lambda;
  r.stationarity = stat.size() ? stat.lpNorm<Eigen::Infinity>() : 0.0;
  if (qp.num_eq() > 0) r.primal_eq = (qp.E * z - qp.f).lpNorm<Eigen::Infinity>();
  if (qp.num_ineq() > 0) {
    const VecX row = qp.C * z + slack - qp.d;
    for (int i = 0; i < qp.num_ineq(); ++i) {
      r.primal_ineq = std::max({r.primal_ineq, -row(i), -slack(i)});
      double dual = std::max(0.0, -lambda(i));
      if (qp.rho(i) > 0.0) dual = std::max(dual, lambda(i) - qp.rho(i));
      r.dual = std::max(r.dual, dual);
      r.complementarity = std::max(r.complementarity, std::abs(lambda(i) * row(i)));
      if (qp.rho(i) > 0.0) r.complementarity = std::max(r.complementarity, std::abs(slack(i) * (qp.rho(i) - lambda(i))));
    }
  }
  return r;
}

namespace {

using RowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class KktSystem {
 public:
  KktSystem(const QpProblem& qp, const QpSettings& settings)
      : qp_(qp), n_(qp.num_vars()), me_(qp.num_eq()), delta_(settings.regularization),
        refine_(settings.refinement_steps), c_rows_(qp.C) {}

  // Assembles and factors [[H + C'WC + delta I, E'], [E, -delta I]] (lower part).
  bool factor(const VecX& w) {
    w_ = w;
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(qp_.H.nonZeros() + qp_.E.nonZeros() + n_ + me_) + pair_count());
    for (int k = 0; k < qp_.H.outerSize(); ++k) {
      for (SpMat::InnerIterator it(qp_.H, k); it; ++it) {
        if (it.row() >= it.col()) trip.emplace_back(it.row(), it.col(), it.value());
      }
    }
    for (int i = 0; i < c_rows_.rows(); ++i) {
      for (RowMat::InnerIterator a(c_rows_, i); a; ++a) {
        for (RowMat::InnerIterator b(c_rows_, i); b; ++b) {
          if (a.col() >= b.col()) trip.emplace_back(a.col(), b.col(), w(i) * a.value() * b.value());
        }
      }
    }
    for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, delta_);
    for (int k = 0; k < qp_.E.outerSize(); ++k) {
      for (SpMat::InnerIterator it(qp_.E, k); it; ++it) trip.emplace_back(n_ + it.row(), it.col(), it.value());
    }
    for (int i = 0; i < me_; ++i) trip.emplace_back(n_ + i, n_ + i, -delta_);
    k_.resize(n_ + me_, n_ + me_);
    k_.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(k_);
      analyzed_ = true;
    }
    ldlt_.factorize(k_);
    return ldlt_.info() == Eigen::Success;
  }

  // Solves the unregularized system by refinement around the regularized factor.
  VecX solve(const VecX& rhs) const {
    VecX x = ldlt_.solve(rhs);
    for (int it = 0; it < refine_; ++it) {
      const VecX r = rhs - apply_exact(x);
      if (r.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
      x += ldlt_.solve(r);
    }
    return x;
  }

 private:
  size_t pair_count() const {
    size_t c = 0;
    for (int i = 0; i < c_rows_.rows(); ++i) {
      const size_t nz = static_cast<size_t>(c_rows_.outerIndexPtr()[i + 1] - c_rows_.outerIndexPtr()[i]);
      c += nz * (nz + 1) / 2;
    }
    return c;
  }

  VecX apply_exact(const VecX& x) const {
    const auto xz = x.head(n_);
    VecX out(n_ + me_);
    VecX top = qp_.H * xz;
    if (c_rows_.rows() > 0) top += qp_.C.transpose() * (w_.asDiagonal() * (qp_.C * xz));
    if (me_ > 0) {
      top += qp_.E.transpose() * x.tail(me_);
      out.tail(me_) = qp_.E * xz;
    }
    out.head(n_) = top;
    return out;
  }

  const QpProblem& qp_;
  int n_;
  int me_;
  double delta_;
  int refine_;
  RowMat c_rows_;
  VecX w_;
  SpMat k_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
  bool analyzed_ = false;
};

double max_step(const VecX& x, const VecX& dx, const std::vector<char>& active) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!active[static_cast<size_t>(i)]) continue;
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

}  // namespace

QpResult solve_qp(const QpProblem& qp, const QpSettings& settings) {
  qp.validate();
  const int n = qp.num_vars(), me = qp.num_eq(), mi = qp.num_ineq();
  std::vector<char> all(static_cast<size_t>(mi), 1), soft(static_cast<size_t>(mi), 0);
  int n_soft = 0;
  for (int i = 0; i < mi; ++i) {
    soft[static_cast<size_t>(i)] = qp.rho(i) > 0.0;
    n_soft += soft[static_cast<size_t>(i)];
  }
  const VecX soft_mask = Eigen::Map<const Eigen::Matrix<char, Eigen::Dynamic, 1>>(soft.data(), mi).cast<double>();

  KktSystem kkt(qp, settings);

  // Starting point: least-squares fit of the inequality rows under the equalities.
  VecX z = VecX::Zero(n), y = VecX::Zero(me);
  {
    const VecX w = VecX::Ones(mi);
    if (!kkt.factor(w)) throw std::runtime_error("qp: initial factorization failed");
    VecX rhs(n + me);
    rhs.head(n) = -qp.g;
    if (mi > 0) rhs.head(n) += qp.C.transpose() * qp.d;
    rhs.tail(me) = qp.f;
    const VecX sol = kkt.solve(rhs);
    z = sol.head(n);
    y = -sol.tail(me);
  }
  VecX t(mi), lambda(mi), s = VecX::Zero(mi), nu = VecX::Zero(mi);
  {
    const VecX r = mi ? VecX(qp.C * z - qp.d) : VecX();
    for (int i = 0; i < mi; ++i) {
      t(i) = std::max(r(i), 0.0) + 1.0;
      if (soft[static_cast<size_t>(i)]) {
        s(i) = t(i) - r(i);
        lambda(i) = std::min(1.0, 0.5 * qp.rho(i));
        nu(i) = qp.rho(i) - lambda(i);
      } else {
        lambda(i) = 1.0;
      }
    }
  }

  QpResult res;
  const double tol = settings.tolerance;
  const int m_total = mi + n_soft;
  VecX rd, re, rc, rr;
  const auto residuals = [&]() {
    rd = qp.H * z + qp.g;
    if (me) rd -= qp.E.transpose() * y;
    if (mi) rd -= qp.C.transpose() * lambda;
    re = me ? VecX(qp.E * z - qp.f) : VecX();
    rc = mi ? VecX(qp.C * z + s - t - qp.d) : VecX();
    rr = ((qp.rho - lambda - nu).array() * soft_mask.array()).matrix();
  };
  const auto inf_norm = [](const VecX& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; };

  bool converged = false;
  bool diverged = false;
  int iter = 0;
  for (; iter < settings.max_iterations; ++iter) {
    residuals();
    const VecX comp_t = t.cwiseProduct(lambda);
    const VecX comp_s = s.cwiseProduct(nu);
    const double comp = std::max(inf_norm(comp_t), inf_norm(comp_s));
    if (inf_norm(rd) <= tol && inf_norm(re) <= tol && inf_norm(rc) <= tol && inf_norm(rr) <= tol && comp <= 0.1 * tol) {
      converged = true;
      break;
    }
    if (m_total == 0 && inf_norm(rd) <= tol && inf_norm(re) <= tol) {
      converged = true;
      break;
    }
    if (inf_norm(lambda) > 1e12 || !z.allFinite()) {
      diverged = true;
      break;
    }
    const double mu = m_total ? (comp_t.sum() + comp_s.sum()) / m_total : 0.0;

    VecX w(mi);
    for (int i = 0; i < mi; ++i) {
      double dinv = t(i) / lambda(i);
      if (soft[static_cast<size_t>(i)]) dinv += s(i) / nu(i);
      w(i) = 1.0 / dinv;
    }
    if (!kkt.factor(w)) {
      diverged = true;
      break;
    }

    VecX dz, dy, dl, dt, ds, dn;
    const auto direction = [&](const VecX& r_tl, const VecX& r_sn) {
      VecX rhs_c(mi);
      for (int i = 0; i < mi; ++i) {
        rhs_c(i) = -rc(i) - r_tl(i) / lambda(i);
        if (soft[static_cast<size_t>(i)]) rhs_c(i) += (r_sn(i) + s(i) * rr(i)) / nu(i);
      }
      VecX rhs(n + me);
      rhs.head(n) = -rd;
      if (mi) rhs.head(n) += qp.C.transpose() * w.cwiseProduct(rhs_c);
      if (me) rhs.tail(me) = -re;
      const VecX sol = kkt.solve(rhs);
      dz = sol.head(n);
      dy = -sol.tail(me);
      dl = mi ? VecX(w.cwiseProduct(rhs_c - qp.C * dz)) : VecX();
      dt.resize(mi);
      ds = VecX::Zero(mi);
      dn = VecX::Zero(mi);
      for (int i = 0; i < mi; ++i) {
        dt(i) = (-r_tl(i) - t(i) * dl(i)) / lambda(i);
        if (soft[static_cast<size_t>(i)]) {
          dn(i) = rr(i) - dl(i);
          ds(i) = (-r_sn(i) - s(i) * dn(i)) / nu(i);
        }
      }
    };
    const auto step_length = [&]() {
      double a = std::min(max_step(t, dt, all), max_step(lambda, dl, all));
      a = std::min({a, max_step(s, ds, soft), max_step(nu, dn, soft)});
      return a;
    };

    // Predictor.
    direction(comp_t, comp_s);
    const double a_aff = step_length();
    double mu_aff = 0.0;
    if (m_total) {
      const VecX ta = t + a_aff * dt, la = lambda + a_aff * dl, sa = s + a_aff * ds, na = nu + a_aff * dn;
      mu_aff = (ta.dot(la) + (sa.cwiseProduct(na).cwiseProduct(soft_mask)).sum()) / m_total;
    }
    const double sigma = mu > 0.0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;

    // Corrector.
    const VecX r_tl = comp_t + dt.cwiseProduct(dl) - VecX::Constant(mi, sigma * mu);
    const VecX r_sn = (comp_s + ds.cwiseProduct(dn) - VecX::Constant(mi, sigma * mu)).cwiseProduct(soft_mask);
    direction(r_tl, r_sn);
    const double a = std::min(1.0, 0.995 * step_length());

    z += a * dz;
    y += a * dy;
    lambda += a * dl;
    t += a * dt;
    s += a * ds;
    nu += a * dn;
  }

  res.z = z;
  res.y = y;
  res.lambda = lambda;
  res.iterations = iter;
  res.slack = VecX::Zero(mi);
  if (mi) {
    const VecX row = qp.C * z - qp.d;
    for (int i = 0; i < mi; ++i) {
      if (soft[static_cast<size_t>(i)]) res.slack(i) = std::max(0.0, -row(i));
    }
  }
  res.residuals = kkt_residuals(qp, res.z, res.y, res.lambda, res.slack);
  res.objective = qp_objective(qp, res.z, res.slack);
  if (converged && res.residuals.max() <= 10.0 * tol) {
    res.status = QpStatus::Optimal;
  } else {
    const VecX row = mi ? VecX(qp.C * z - qp.d) : VecX();
    for (int i = 0; i < mi; ++i) {
      if (!soft[static_cast<size_t>(i)] && row(i) < -tol) res.violated_hard_rows.push_back(i);
    }
    const bool eq_bad = me && (qp.E * z - qp.f).lpNorm<Eigen::Infinity>() > tol;
    res.status = (diverged || !res.violated_hard_rows.empty() || eq_bad) ? QpStatus::InfeasibleHard
                                                                         : QpStatus::MaxIterations;
    if (converged) res.status = QpStatus::Optimal;
  }
  return res;
}

}  // namespace phtmpc
