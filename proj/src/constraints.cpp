#include "wcreg/constraints.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "wcreg/error.hpp"
#include "wcreg/math.hpp"

namespace wcreg {

void ConstraintCert::validate() const {
  if (!model) throw ConfigError("ConstraintCert", "missing model");
  if (!(epsilon_f > 0.0)) throw ConfigError("ConstraintCert", "epsilon_f must be positive");
  if (!(sign_eta > 0.0)) throw ConfigError("ConstraintCert", "sign_eta must be positive");
  if (theta_star.values.size() != model->num_params()) throw DimensionError("ConstraintCert", "theta size mismatch");
}

FitReport fit_sign_surrogate(const ScalarField& f, const Model& model, const Box& box, double eta, ActiveConfig cfg) {
  if (!(eta > 0.0)) throw ConfigError("fit_sign_surrogate", "eta must be positive");
  cfg.train.sign_eta = eta;
  const ScalarField target = [&](const Eigen::VectorXd& x) { return std::tanh(eta * f(x)); };
  return fit_worst_case(target, model, box, cfg);
}

GlobalResult compute_delta_f(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta, const Box& box,
                             const DeltaConfig& cfg) {
  const ScalarField obj = [&](const Eigen::VectorXd& x) { return sign_le0(f(x)) > 0.0 ? model.eval(theta, x) : 0.0; };
  GlobalResult best = minimize_global(obj, box, cfg.global);
  double half = 1.0;
  for (int round = 0; round < cfg.zoom_rounds; ++round) {
    half *= cfg.zoom_factor;
    const Eigen::VectorXd radius = half * box.width();
    const Box local(box.clamp(best.x_star - radius), box.clamp(best.x_star + radius));
    DirectConfig dc = cfg.global;
    dc.max_evals = std::max(1, dc.budget_for(box.dim()) / 4);
    const GlobalResult r = minimize_global(obj, local, dc);
    best.evals_used += r.evals_used;
    best.nonfinite_evals += r.nonfinite_evals;
    if (r.value_star < best.value_star) {
      best.value_star = r.value_star;
      best.x_star = r.x_star;
      best.history.emplace_back(best.evals_used, best.value_star);
    }
  }
  return best;
}

ConstraintCert make_certificate(const ScalarField& f, std::shared_ptr<const Model> model, const Eigen::VectorXd& theta,
                                const Box& box, const DeltaConfig& cfg, double epsilon_f, double sign_eta) {
  ConstraintCert c;
  c.model = std::move(model);
  c.theta_star = ParamVec{theta, c.model->layout()};
  c.box = box;
  c.epsilon_f = epsilon_f;
  c.sign_eta = sign_eta;
  c.validate();
  const GlobalResult g = compute_delta_f(f, *c.model, theta, box, cfg);
  c.delta_f = g.value_star;
  c.delta_evals = g.evals_used;
  c.delta_argmin = g.x_star;
  return c;
}

double certified_constraint(const ConstraintCert& cert, const Eigen::VectorXd& x) {
  return cert.model->eval(cert.theta_star.values, x) - cert.delta_f + cert.epsilon_f;
}

ConvexConstraint polyhedral_form(const ConstraintCert& cert) {
  ConvexConstraint c;
  c.offset = cert.delta_f - cert.epsilon_f;
  const ModelSpec& spec = cert.model->spec();
  if (spec.gate || spec.saturation) throw ConfigError("polyhedral_form", "gated or saturated surrogates are not convex");
  if (spec.family == Family::kMaxAffine) {
    // max_i (A_i x - b_i) <= delta_f - epsilon_f  <=>  A x <= b + delta_f - epsilon_f
    c.polyhedral = true;
    c.A = cert.theta_star.block("A");
    c.b = cert.theta_star.block("b").col(0).array() + c.offset;
    return c;
  }
  if (spec.family == Family::kInputConvex) return c;
  throw ConfigError("polyhedral_form", "family " + family_name(spec.family) + " has no convex constraint form");
}

std::string h_representation(const ConvexConstraint& c) {
  if (!c.polyhedral) throw ConfigError("h_representation", "constraint is not polyhedral");
  std::ostringstream os;
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < c.A.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.A.cols(); ++j) os << (j ? " " : "") << c.A(i, j);
    os << " | " << c.b[i] << "\n";
  }
  return os.str();
}

CertificateCheck check_certificate(const ScalarField& f, const ConstraintCert& cert, const Eigen::MatrixXd& points) {
  CertificateCheck out;
  out.points = points.cols();
  Eigen::Index feasible = 0, rejected = 0, agree = 0;
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    const Eigen::VectorXd x = points.col(k);
    const double fx = f(x);
    const double fhat = cert.model->eval(cert.theta_star.values, x);
    const bool declared = fhat - cert.delta_f + cert.epsilon_f <= 0.0;
    if (fx > 0.0 && declared) ++out.violations;
    if (fx <= 0.0) {
      ++feasible;
      if (!declared) ++rejected;
    }
    if (sign_le0(fx) == sign_le0(fhat)) ++agree;
  }
  out.conservativeness = feasible ? static_cast<double>(rejected) / static_cast<double>(feasible) : 0.0;
  out.sign_agreement = out.points ? static_cast<double>(agree) / static_cast<double>(out.points) : 1.0;
  return out;
}

}  // namespace wcreg
