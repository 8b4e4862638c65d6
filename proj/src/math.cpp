#include "wcreg/math.hpp"

#include <sstream>

namespace wcreg {

Eigen::VectorXd sat_hard(const Eigen::VectorXd& y, const Eigen::VectorXd& y_min, const Eigen::VectorXd& y_max) {
  if (y.size() != y_min.size() || y.size() != y_max.size()) throw DimensionError("sat_hard", "size mismatch");
  if ((y_min.array() > y_max.array()).any()) throw ConfigError("sat_hard", "y_min > y_max");
  return y.cwiseMax(y_min).cwiseMin(y_max);
}

Eigen::VectorXd sat_smooth(const Eigen::VectorXd& y, const Eigen::VectorXd& y_min, const Eigen::VectorXd& y_max,
                           double eta) {
  if (y.size() != y_min.size() || y.size() != y_max.size()) throw DimensionError("sat_smooth", "size mismatch");
  if (!(eta > 0.0)) throw ConfigError("sat_smooth", "eta must be positive");
  if ((y_min.array() >= y_max.array()).any()) throw ConfigError("sat_smooth", "requires y_min < y_max");
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = sat_smooth(y[i], y_min[i], y_max[i], eta);
  return out;
}

double sign_transform(double value, double eta) {
  if (!(eta > 0.0)) throw ConfigError("sign_transform", "eta must be positive");
  return std::tanh(eta * value);
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::kTanh: return "tanh";
    case ActivationKind::kRelu: return "relu";
    case ActivationKind::kLeakyRelu: {
      std::ostringstream os;
      os.precision(17);
      os << "leaky-relu(" << slope << ")";
      return os.str();
    }
    case ActivationKind::kSoftplus: return "softplus";
    case ActivationKind::kSigmoid: return "sigmoid";
    case ActivationKind::kLinear: return "linear";
  }
  return "linear";
}

Activation Activation::parse(const std::string& s) {
  if (s == "tanh") return tanh();
  if (s == "relu") return relu();
  if (s == "softplus") return softplus();
  if (s == "sigmoid") return sigmoid();
  if (s == "linear") return linear();
  const std::string prefix = "leaky-relu";
  if (s.rfind(prefix, 0) == 0) {
    double slope = 0.1;
    if (s.size() > prefix.size()) {
      if (s[prefix.size()] != '(' || s.back() != ')') throw ConfigError("activation", "malformed '" + s + "'");
      slope = std::stod(s.substr(prefix.size() + 1, s.size() - prefix.size() - 2));
    }
    if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("activation", "leaky-relu slope must lie in (0,1)");
    return leaky_relu(slope);
  }
  throw ConfigError("activation", "unknown activation '" + s + "'");
}

}  // namespace wcreg
