#include "wcreg/qp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "wcreg/error.hpp"

namespace wcreg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool symmetric(const MatrixXd& M) {
  return M.rows() == M.cols() && (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + M.cwiseAbs().maxCoeff());
}

Eigen::LLT<MatrixXd> factor(const MatrixXd& Q, const char* where) {
  Eigen::LLT<MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success) throw NumericError(where, "Q is not positive definite");
  return llt;
}

}  // namespace

std::string qp_status_name(QpStatus s) { return s == QpStatus::kOptimal ? "optimal" : "infeasible"; }

void MpQp::validate() const {
  const Index nz = Q.rows(), nx = F.cols(), m = A.rows();
  if (nz < 1 || !symmetric(Q)) throw DimensionError("MpQp", "Q must be a nonempty symmetric matrix");
  factor(Q, "MpQp");
  if (F.rows() != nz || f.size() != nz) throw DimensionError("MpQp", "F and f need n_z rows");
  if (A.cols() != nz || B.rows() != m || B.cols() != nx || b.size() != m)
    throw DimensionError("MpQp", "constraint blocks have inconsistent sizes");
  if (box.dim() != 0 && box.dim() != nx) throw DimensionError("MpQp", "parameter box dimension differs from n_x");
  if (Y.size() != 0 && (Y.rows() != nx || Y.cols() != nx)) throw DimensionError("MpQp", "Y must be n_x x n_x");
  if (!Q.allFinite() || !F.allFinite() || !f.allFinite() || !A.allFinite() || !B.allFinite() || !b.allFinite())
    throw NumericError("MpQp", "non-finite problem data");
}

double kkt_residual(const MatrixXd& Q, const VectorXd& c, const MatrixXd& A, const VectorXd& b, const VectorXd& z,
                    const VectorXd& lambda) {
  const VectorXd Qz = Q * z;
  const VectorXd Atl = A.transpose() * lambda;
  const double scale = 1.0 + std::max({c.cwiseAbs().maxCoeff(), Qz.cwiseAbs().maxCoeff(),
                                       Atl.size() ? Atl.cwiseAbs().maxCoeff() : 0.0});
  double res = (Qz + c + Atl).cwiseAbs().maxCoeff() / scale;
  if (A.rows() == 0) return res;
  const double lam_scale = 1.0 + lambda.cwiseAbs().maxCoeff();
  const double zn = z.cwiseAbs().maxCoeff();
  for (Index i = 0; i < A.rows(); ++i) {
    const double slack = A.row(i).dot(z) - b[i];
    const double row_scale = 1.0 + std::abs(b[i]) + A.row(i).norm() * zn;
    res = std::max(res, std::max(slack, 0.0) / row_scale);
    res = std::max(res, std::max(-lambda[i], 0.0) / lam_scale);
    res = std::max(res, std::abs(lambda[i] * slack) / (lam_scale * row_scale));
  }
  return res;
}

QpSolution solve_qp(const MatrixXd& Q, const VectorXd& c, const MatrixXd& A, const VectorXd& b, double tol) {
  const Index n = Q.rows(), m = A.rows();
  if (Q.cols() != n || c.size() != n || A.cols() != n || b.size() != m)
    throw DimensionError("solve_qp", "inconsistent problem dimensions");
  if (!(tol > 0.0)) throw ConfigError("solve_qp", "tol must be positive");
  const auto llt = factor(Q, "solve_qp");
  const VectorXd norms = A.rowwise().norm();

  QpSolution sol;
  sol.lambda = VectorXd::Zero(m);
  VectorXd z = -llt.solve(c);
  std::vector<Index> act;
  std::vector<double> u;
  std::vector<char> in_act(m, 0);
  const int guard = 20 * static_cast<int>(m + n) + 100;

  auto infeasible = [&]() {
    sol.z = z;
    sol.status = QpStatus::kInfeasible;
    sol.kkt_residual = kInf;
    return sol;
  };

  while (true) {
    // Most violated constraint by scaled violation; strict comparison keeps the smallest index.
    const double zn = z.cwiseAbs().maxCoeff();
    Index p = -1;
    double worst = 0.0;
    for (Index j = 0; j < m; ++j) {
      if (in_act[j]) continue;
      const double v = A.row(j).dot(z) - b[j];
      const double thr = tol * (1.0 + std::abs(b[j]) + norms[j] * zn);
      if (norms[j] == 0.0) {
        if (v > thr) return infeasible();
        continue;
      }
      if (v > thr && v / norms[j] > worst) {
        worst = v / norms[j];
        p = j;
      }
    }
    if (p < 0) break;

    const VectorXd ap = A.row(p).transpose();
    const VectorXd Ginv_ap = llt.solve(ap);
    double up = 0.0;
    while (true) {
      if (++sol.iterations > guard)
        throw Error("solve_qp", "cycling guard exceeded after " + std::to_string(guard) + " iterations");
      const Index k_act = static_cast<Index>(act.size());
      VectorXd r = VectorXd::Zero(k_act);
      VectorXd d = Ginv_ap;
      if (k_act > 0) {
        MatrixXd Abar(n, k_act);
        for (Index i = 0; i < k_act; ++i) Abar.col(i) = A.row(act[i]).transpose();
        const MatrixXd Ginv_Abar = llt.solve(Abar);
        r = (Abar.transpose() * Ginv_Abar).ldlt().solve(Abar.transpose() * Ginv_ap);
        d -= Ginv_Abar * r;
      }

      // Partial step: the first active multiplier to reach zero.
      double t1 = kInf;
      Index k_drop = -1;
      for (Index i = 0; i < k_act; ++i) {
        if (r[i] <= 0.0) continue;
        const double ratio = u[i] / r[i];
        if (ratio < t1 || (ratio == t1 && act[i] < act[k_drop])) {
          t1 = ratio;
          k_drop = i;
        }
      }
      // Full step: constraint p becomes active.
      double t2 = kInf;
      const double curv = ap.dot(d);
      if (d.norm() > 1e-10 * Ginv_ap.norm() && curv > 0.0) t2 = (ap.dot(z) - b[p]) / curv;

      const double t = std::min(t1, t2);
      if (t == kInf) return infeasible();
      for (Index i = 0; i < k_act; ++i) u[i] -= t * r[i];
      up += t;
      if (t2 < kInf) z -= t * d;
      if (t2 <= t1) {
        act.push_back(p);
        u.push_back(up);
        in_act[p] = 1;
        break;
      }
      in_act[act[k_drop]] = 0;
      act.erase(act.begin() + k_drop);
      u.erase(u.begin() + k_drop);
    }
  }

  sol.z = z;
  for (std::size_t i = 0; i < act.size(); ++i) sol.lambda[act[i]] = std::max(u[i], 0.0);
  sol.active = act;
  std::sort(sol.active.begin(), sol.active.end());
  sol.kkt_residual = kkt_residual(Q, c, A, b, z, sol.lambda);
  sol.status = QpStatus::kOptimal;
  return sol;
}

QpSolution solve_qp(const MpQp& prob, const VectorXd& x, double tol) {
  if (x.size() != prob.n_x()) throw DimensionError("solve_qp", "parameter size differs from n_x");
  return solve_qp(prob.Q, prob.F * x + prob.f, prob.A, prob.B * x + prob.b, tol);
}

UnconstrainedLaw unconstrained_law(const MpQp& prob, Index component) {
  if (component < 0 || component >= prob.n_z()) throw DimensionError("unconstrained_law", "component out of range");
  const auto llt = factor(prob.Q, "unconstrained_law");
  UnconstrainedLaw w;
  w.coef = -llt.solve(prob.F).row(component).transpose();
  w.offset = -llt.solve(prob.f)[component];
  return w;
}

double unconstrained_row(const MpQp& prob, const VectorXd& x, Index component) {
  return unconstrained_law(prob, component)(x);
}

bool CriticalRegion::contains(const VectorXd& x, double tol) const {
  if (H.rows() == 0) return true;
  return ((H * x - K).array() <= tol).all();
}

CriticalRegion cr0(const MpQp& prob, double rho) {
  prob.validate();
  if (!(rho > 0.0)) throw ConfigError("cr0", "rho must be positive");
  const auto llt = factor(prob.Q, "cr0");
  CriticalRegion cr;
  cr.H = -prob.A * llt.solve(prob.F) - prob.B;
  cr.K = prob.b + prob.A * llt.solve(prob.f);

  const Index m = cr.H.rows(), nx = cr.H.cols();
  MatrixXd Hn(m, nx);
  VectorXd Kn(m);
  std::vector<char> alive(m, 1);
  for (Index i = 0; i < m; ++i) {
    const double nrm = cr.H.row(i).norm();
    if (nrm <= 1e-12 * (1.0 + std::abs(cr.K[i]))) {
      // 0 <= K_i holds everywhere or nowhere; only the former can be dropped.
      Hn.row(i).setZero();
      Kn[i] = cr.K[i];
      if (cr.K[i] >= 0.0) alive[i] = 0;
      continue;
    }
    Hn.row(i) = cr.H.row(i) / nrm;
    Kn[i] = cr.K[i] / nrm;
  }

  // Row i is redundant when max H_i x over the other rows stays <= K_i. The LP is
  // regularized as min 1/2 |x|^2 - H_i x / rho, which stays bounded.
  const MatrixXd I = MatrixXd::Identity(nx, nx);
  for (Index i = 0; i < m; ++i) {
    if (!alive[i] || Hn.row(i).isZero()) continue;
    std::vector<Index> others;
    for (Index j = 0; j < m; ++j)
      if (j != i && alive[j]) others.push_back(j);
    MatrixXd Ho(others.size(), nx);
    VectorXd Ko(others.size());
    for (std::size_t j = 0; j < others.size(); ++j) {
      Ho.row(j) = Hn.row(others[j]);
      Ko[j] = Kn[others[j]];
    }
    const QpSolution s = solve_qp(I, -Hn.row(i).transpose() / rho, Ho, Ko);
    if (s.status == QpStatus::kInfeasible) break;  // empty region: keep the remaining rows
    if (Hn.row(i).dot(s.z) <= Kn[i] + 1e-9 * (1.0 + std::abs(Kn[i]))) alive[i] = 0;
  }
  for (Index i = 0; i < m; ++i)
    if (alive[i]) cr.kept.push_back(i);
  cr.H_min.resize(cr.kept.size(), nx);
  cr.K_min.resize(cr.kept.size());
  for (std::size_t j = 0; j < cr.kept.size(); ++j) {
    cr.H_min.row(j) = Hn.row(cr.kept[j]);
    cr.K_min[j] = Kn[cr.kept[j]];
  }
  return cr;
}

void MpcSpec::validate() const {
  const Index nxi = A.rows(), nu = B.cols(), nt = C.rows();
  if (nxi < 1 || A.cols() != nxi || B.rows() != nxi || C.cols() != nxi || nu < 1 || nt < 1)
    throw DimensionError("MpcSpec", "plant matrices have inconsistent sizes");
  if (!(N >= Nu && Nu >= 1 && N >= Nc && Nc >= 1)) throw ConfigError("MpcSpec", "need N >= Nu >= 1 and N >= Nc >= 1");
  if (Q_tau.rows() != nt || !symmetric(Q_tau) || Eigen::SelfAdjointEigenSolver<MatrixXd>(Q_tau).eigenvalues().minCoeff() < -1e-12)
    throw ConfigError("MpcSpec", "Q_tau must be symmetric positive semidefinite");
  if (Q_du.rows() != nu || !symmetric(Q_du) || Eigen::LLT<MatrixXd>(Q_du).info() != Eigen::Success)
    throw ConfigError("MpcSpec", "Q_du must be symmetric positive definite");
  if (!(rho2 >= 0.0 && rho1 >= 0.0)) throw ConfigError("MpcSpec", "slack weights must be nonnegative");
  auto pair_ok = [](const VectorXd& lo, const VectorXd& hi, Index n) {
    return lo.size() == n && hi.size() == n && (lo.array() <= hi.array()).all();
  };
  if (!pair_ok(u_min, u_max, nu) || !pair_ok(du_min, du_max, nu) || !pair_ok(tau_min, tau_max, nt))
    throw ConfigError("MpcSpec", "bounds need matching sizes with min <= max");
  if (V_min.size() != nt || V_max.size() != nt || (V_min.array() < 0.0).any() || (V_max.array() < 0.0).any())
    throw ConfigError("MpcSpec", "ECR vectors must be nonnegative with n_tau entries");
  if (region.dim() != 0 && region.dim() != n_x()) throw DimensionError("MpcSpec", "region dimension differs from n_x");
  if (!(Ts > 0.0)) throw ConfigError("MpcSpec", "Ts must be positive");
}

MpQp condense_mpc(const MpcSpec& s) {
  s.validate();
  const Index nxi = s.n_xi(), nu = s.n_u(), nt = s.n_tau(), nx = s.n_x();
  const Index nz = s.Nu * nu + 1, iz = nz - 1;

  auto sel = [&](int k) {
    MatrixXd S = MatrixXd::Zero(nu, nz);
    S.middleCols(std::min(k, s.Nu - 1) * nu, nu).setIdentity();
    return S;
  };
  MatrixXd Px = MatrixXd::Zero(nxi, nx), Pr = MatrixXd::Zero(nt, nx), Pu = MatrixXd::Zero(nu, nx);
  Px.leftCols(nxi).setIdentity();
  Pr.middleCols(nxi, nt).setIdentity();
  Pu.rightCols(nu).setIdentity();

  // xi_k = Xz[k] z + Xx[k] x.
  std::vector<MatrixXd> Xz(s.N + 1), Xx(s.N + 1);
  Xz[0] = MatrixXd::Zero(nxi, nz);
  Xx[0] = Px;
  for (int k = 0; k < s.N; ++k) {
    Xz[k + 1] = s.A * Xz[k] + s.B * sel(k);
    Xx[k + 1] = s.A * Xx[k];
  }

  MpQp qp;
  qp.Q = MatrixXd::Zero(nz, nz);
  qp.F = MatrixXd::Zero(nz, nx);
  qp.f = VectorXd::Zero(nz);
  qp.Y = MatrixXd::Zero(nx, nx);
  for (int k = 1; k <= s.N; ++k) {
    const MatrixXd Ez = s.C * Xz[k], Ex = s.C * Xx[k] - Pr;
    qp.Q += 2.0 * Ez.transpose() * s.Q_tau * Ez;
    qp.F += 2.0 * Ez.transpose() * s.Q_tau * Ex;
    qp.Y += Ex.transpose() * s.Q_tau * Ex;
  }
  for (int k = 0; k < s.Nu; ++k) {
    const MatrixXd Dz = k == 0 ? sel(0) : MatrixXd(sel(k) - sel(k - 1));
    const MatrixXd Dx = k == 0 ? MatrixXd(-Pu) : MatrixXd::Zero(nu, nx);
    qp.Q += 2.0 * Dz.transpose() * s.Q_du * Dz;
    qp.F += 2.0 * Dz.transpose() * s.Q_du * Dx;
    qp.Y += Dx.transpose() * s.Q_du * Dx;
  }
  qp.Q(iz, iz) += 2.0 * s.rho2;
  if (s.rho2 == 0.0) qp.Q(iz, iz) += kSlackRegularization;
  qp.f[iz] = s.rho1;
  qp.Q = 0.5 * (qp.Q + qp.Q.transpose());
  qp.Y = 0.5 * (qp.Y + qp.Y.transpose());

  // Rows a z <= bx x + b, skipping infinite bounds.
  std::vector<RowVectorXd> ra, rb;
  std::vector<double> rc;
  auto add = [&](const RowVectorXd& a, const RowVectorXd& bx, double bound) {
    if (!std::isfinite(bound)) return;
    ra.push_back(a);
    rb.push_back(bx);
    rc.push_back(bound);
  };
  const RowVectorXd zero_x = RowVectorXd::Zero(nx);
  RowVectorXd e_zeta = RowVectorXd::Zero(nz);
  e_zeta[iz] = 1.0;
  for (int k = 0; k < s.Nu; ++k)
    for (Index i = 0; i < nu; ++i) {
      add(sel(k).row(i), zero_x, s.u_max[i]);
      add(-sel(k).row(i), zero_x, -s.u_min[i]);
    }
  for (int k = 0; k < s.Nu; ++k) {
    const MatrixXd Dz = k == 0 ? sel(0) : MatrixXd(sel(k) - sel(k - 1));
    const MatrixXd Dx = k == 0 ? MatrixXd(-Pu) : MatrixXd::Zero(nu, nx);
    for (Index i = 0; i < nu; ++i) {
      add(Dz.row(i), -Dx.row(i), s.du_max[i]);
      add(-Dz.row(i), Dx.row(i), -s.du_min[i]);
    }
  }
  for (int k = 1; k <= s.Nc; ++k) {
    const MatrixXd Tz = s.C * Xz[k], Tx = s.C * Xx[k];
    for (Index i = 0; i < nt; ++i) {
      add(Tz.row(i) - s.V_max[i] * e_zeta, -Tx.row(i), s.tau_max[i]);
      add(-Tz.row(i) - s.V_min[i] * e_zeta, Tx.row(i), -s.tau_min[i]);
    }
  }
  add(-e_zeta, zero_x, 0.0);

  const Index m = static_cast<Index>(ra.size());
  qp.A.resize(m, nz);
  qp.B.resize(m, nx);
  qp.b.resize(m);
  for (Index i = 0; i < m; ++i) {
    qp.A.row(i) = ra[i];
    qp.B.row(i) = rb[i];
    qp.b[i] = rc[i];
  }
  qp.box = s.region;
  qp.validate();
  return qp;
}

namespace {

struct MpcParts {
  VectorXd xi, r, u_prev;
};

MpcParts split(const MpcSpec& s, const VectorXd& z, const VectorXd& x) {
  if (x.size() != s.n_x() || z.size() != s.Nu * s.n_u() + 1) throw DimensionError("mpc", "z or x has the wrong size");
  return {x.head(s.n_xi()), x.segment(s.n_xi(), s.n_tau()), x.tail(s.n_u())};
}

VectorXd move(const MpcSpec& s, const VectorXd& z, int k) {
  return z.segment(std::min(k, s.Nu - 1) * s.n_u(), s.n_u());
}

}  // namespace

double mpc_cost(const MpcSpec& s, const VectorXd& z, const VectorXd& x) {
  auto [xi, r, u_prev] = split(s, z, x);
  double cost = 0.0;
  for (int k = 0; k < s.N; ++k) {
    const VectorXd u = move(s, z, k);
    const VectorXd du = u - u_prev;
    cost += du.dot(s.Q_du * du);
    xi = s.A * xi + s.B * u;
    const VectorXd e = s.C * xi - r;
    cost += e.dot(s.Q_tau * e);
    u_prev = u;
  }
  const double zeta = z[z.size() - 1];
  return cost + s.rho2 * zeta * zeta + s.rho1 * zeta;
}

double mpc_max_violation(const MpcSpec& s, const VectorXd& z, const VectorXd& x) {
  auto [xi, r, u_prev] = split(s, z, x);
  const double zeta = z[z.size() - 1];
  double worst = -zeta;
  for (int k = 0; k < s.N; ++k) {
    const VectorXd u = move(s, z, k);
    if (k < s.Nu) {
      const VectorXd du = u - u_prev;
      worst = std::max({worst, (u - s.u_max).maxCoeff(), (s.u_min - u).maxCoeff(), (du - s.du_max).maxCoeff(),
                        (s.du_min - du).maxCoeff()});
    }
    xi = s.A * xi + s.B * u;
    if (k + 1 <= s.Nc) {
      const VectorXd tau = s.C * xi;
      worst = std::max({worst, (tau - s.tau_max - zeta * s.V_max).maxCoeff(),
                        (s.tau_min - zeta * s.V_min - tau).maxCoeff()});
    }
    u_prev = u;
  }
  return worst;
}

void zoh_discretize(const MatrixXd& Ac, const MatrixXd& Bc, double Ts, MatrixXd& Ad, MatrixXd& Bd) {
  const Index n = Ac.rows(), nu = Bc.cols();
  if (Ac.cols() != n || Bc.rows() != n) throw DimensionError("zoh_discretize", "inconsistent plant sizes");
  MatrixXd M = MatrixXd::Zero(n + nu, n + nu);
  M.topLeftCorner(n, n) = Ac * Ts;
  M.topRightCorner(n, nu) = Bc * Ts;
  const MatrixXd E = M.exp();
  Ad = E.topLeftCorner(n, n);
  Bd = E.topRightCorner(n, nu);
}

ModelSpec mpc_gated_model(const MpQp& prob, const ModelSpec& inner, const OutputLimits& limits, double beta,
                          Index component) {
  if (inner.gate || inner.saturation) throw ConfigError("mpc_gated_model", "inner family must be ungated");
  if (inner.n_inputs != prob.n_x()) throw DimensionError("mpc_gated_model", "inner family input size differs from n_x");
  const CriticalRegion cr = cr0(prob);
  const UnconstrainedLaw w = unconstrained_law(prob, component);

  GateSpec gate;
  gate.indicator.mode = IndicatorSpec::Mode::kPwa;
  gate.indicator.G = cr.H_min;
  gate.indicator.g = -cr.K_min;
  gate.indicator.beta = beta;
  gate.indicator.trainable = true;
  gate.w_coef = w.coef;
  gate.w_offset = w.offset;

  SaturationSpec sat;
  sat.mode = SaturationSpec::Mode::kHard;
  sat.y_min = limits.y_min;
  sat.y_max = limits.y_max;
  sat.rate = limits.rate;

  ModelSpec spec = inner;
  spec.gate = gate;
  spec.saturation = sat;
  spec.validate();
  return spec;
}

OutputLimits mpc_output_limits(const MpcSpec& s) {
  OutputLimits lim;
  lim.y_min = s.u_min[0];
  lim.y_max = s.u_max[0];
  if (std::isfinite(s.du_min[0]) || std::isfinite(s.du_max[0]))
    lim.rate = RateLimit{s.n_x() - s.n_u(), s.du_min[0], s.du_max[0]};
  return lim;
}

Trajectory simulate_closed_loop(const MpcSpec& s, const Controller& controller, const VectorXd& xi0,
                                const Reference& reference, int steps, const VectorXd& u_prev0) {
  if (xi0.size() != s.n_xi() || u_prev0.size() != s.n_u())
    throw DimensionError("simulate_closed_loop", "initial state or input has the wrong size");
  if (steps < 0) throw ConfigError("simulate_closed_loop", "steps must be nonnegative");
  Trajectory tr;
  tr.xi.resize(steps + 1, s.n_xi());
  tr.tau.resize(steps + 1, s.n_tau());
  tr.u.resize(steps, s.n_u());
  tr.r.resize(steps, s.n_tau());
  VectorXd xi = xi0, u_prev = u_prev0;
  VectorXd x(s.n_x());
  for (int t = 0; t < steps; ++t) {
    tr.xi.row(t) = xi.transpose();
    tr.tau.row(t) = (s.C * xi).transpose();
    const VectorXd r = reference(t);
    if (r.size() != s.n_tau()) throw DimensionError("step " + std::to_string(t), "reference has the wrong size");
    x << xi, r, u_prev;
    const VectorXd u = controller(x);
    if (u.size() != s.n_u() || !u.allFinite())
      throw NumericError("step " + std::to_string(t), "controller output is non-finite or has the wrong size");
    tr.u.row(t) = u.transpose();
    tr.r.row(t) = r.transpose();
    xi = s.A * xi + s.B * u;
    u_prev = u;
  }
  tr.xi.row(steps) = xi.transpose();
  tr.tau.row(steps) = (s.C * xi).transpose();
  return tr;
}

Controller exact_mpc_controller(const MpQp& prob, Index n_u) {
  return [prob, n_u](const VectorXd& x) -> VectorXd {
    const QpSolution sol = solve_qp(prob, x);
    if (sol.status != QpStatus::kOptimal) throw NumericError("exact_mpc_controller", "QP infeasible");
    return sol.z.head(n_u);
  };
}

MpQp random_mpqp(Index n_x, Index n_z, Index m, double z_lo, double z_hi, const Box& box, std::uint64_t seed) {
  if (n_x < 1 || n_z < 1 || m < 0) throw ConfigError("random_mpqp", "sizes must be positive");
  if (!(z_lo <= 0.0 && 0.0 <= z_hi)) throw ConfigError("random_mpqp", "z bounds must contain 0");
  if (box.dim() != n_x) throw DimensionError("random_mpqp", "box dimension differs from n_x");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto randn = [&](Index r, Index c) {
    MatrixXd M(r, c);
    for (Index i = 0; i < M.size(); ++i) M.data()[i] = nd(rng);
    return M;
  };
  const VectorXd reach = box.lower.cwiseAbs().cwiseMax(box.upper.cwiseAbs());

  MpQp qp;
  const MatrixXd W = randn(n_z, n_z);
  qp.Q = W.transpose() * W / static_cast<double>(n_z) + MatrixXd::Identity(n_z, n_z);
  qp.Q = 0.5 * (qp.Q + qp.Q.transpose());
  qp.F = randn(n_z, n_x);
  qp.f = 0.1 * randn(n_z, 1);
  const MatrixXd Ag = randn(m, n_z), Bg = randn(m, n_x);
  const VectorXd bg = (Bg.cwiseAbs() * reach).array() + 1.0;

  qp.A.resize(m + 2 * n_z, n_z);
  qp.B = MatrixXd::Zero(m + 2 * n_z, n_x);
  qp.b.resize(m + 2 * n_z);
  qp.A << Ag, MatrixXd::Identity(n_z, n_z), -MatrixXd::Identity(n_z, n_z);
  qp.B.topRows(m) = Bg;
  qp.b << bg, VectorXd::Constant(n_z, z_hi), VectorXd::Constant(n_z, -z_lo);
  qp.box = box;
  qp.validate();
  return qp;
}

}  // namespace wcreg
