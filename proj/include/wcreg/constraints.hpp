#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "wcreg/active.hpp"

namespace wcreg {

/// Conservative replacement f_bar(x) = f_hat(x; theta*) - delta_f + epsilon_f of a constraint f(x) <= 0.
struct ConstraintCert {
  std::shared_ptr<const Model> model;
  ParamVec theta_star;
  Box box;
  double delta_f = 0.0;
  double epsilon_f = 1e-6;
  double sign_eta = 10.0;
  int delta_evals = 0;
  Eigen::VectorXd delta_argmin;

  void validate() const;
};

struct DeltaConfig {
  DirectConfig global;
  /// Extra DIRECT passes on boxes shrinking around the incumbent by `zoom_factor`.
  int zoom_rounds = 4;
  double zoom_factor = 0.1;
};

/// Active-learning fit of tanh(eta f) by tanh(eta f_hat); the transform is dropped afterwards.
FitReport fit_sign_surrogate(const ScalarField& f, const Model& model, const Box& box, double eta, ActiveConfig cfg);

/// min_x [f(x) > 0] f_hat(x; theta), with the indicator equal to 0 where f(x) <= 0.
GlobalResult compute_delta_f(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta, const Box& box,
                             const DeltaConfig& cfg);

ConstraintCert make_certificate(const ScalarField& f, std::shared_ptr<const Model> model, const Eigen::VectorXd& theta,
                                const Box& box, const DeltaConfig& cfg, double epsilon_f = 1e-6,
                                double sign_eta = 10.0);

double certified_constraint(const ConstraintCert& cert, const Eigen::VectorXd& x);

/// Convex description of {x : f_bar(x) <= 0}. Max-affine surrogates give
/// {x : A x <= b}; input-convex ones give {x : f_hat(x) <= offset}.
struct ConvexConstraint {
  bool polyhedral = false;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double offset = 0.0;  // delta_f - epsilon_f
};

ConvexConstraint polyhedral_form(const ConstraintCert& cert);

/// One row per halfspace: "a_1 a_2 ... a_n | b".
std::string h_representation(const ConvexConstraint& c);

struct CertificateCheck {
  Eigen::Index points = 0;
  /// Points with f(x) > 0 that the certificate declares feasible.
  Eigen::Index violations = 0;
  /// Fraction of f-feasible points declared infeasible.
  double conservativeness = 0.0;
  /// Fraction of points where sign(f_hat) agrees with sign(f), zero counted as negative.
  double sign_agreement = 0.0;
};

CertificateCheck check_certificate(const ScalarField& f, const ConstraintCert& cert, const Eigen::MatrixXd& points);

}  // namespace wcreg
