#include "spdectl/presets.hpp"

#include <stdexcept>

namespace spdectl {

ControlledMaterialLaw two_layer_law(double u_min, double u_max) {
  if (!(u_min > 0.0)) throw std::invalid_argument("u_min must be > 0 for a = u to stay positive");
  return ControlledMaterialLaw::affine(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, u_min, u_max);
}

Preset temp_control(const PresetParams& pr) {
  const double theta = pr.theta, gamma = pr.gamma;
  Preset p{two_layer_law(pr.u_min, pr.u_max), CoefficientSpec::affine(0.0, 0.0, pr.sigma0, 0.0), {}};
  p.cost.f = [theta](double, double, double y, double u) { return y * y + theta * u * u; };
  p.cost.f_y = [](double, double, double y, double) { return 2.0 * y; };
  p.cost.f_u = [theta](double, double, double, double u) { return 2.0 * theta * u; };
  p.cost.g = [gamma](double y) { return gamma * y * y; };
  p.cost.g_y = [gamma](double y) { return 2.0 * gamma * y; };
  p.cost.domain_lo = pr.cost_lo;
  p.cost.domain_hi = pr.cost_hi;
  return p;
}

Preset heat_storage(const PresetParams& pr) {
  const double g1 = pr.gamma1, g2 = pr.gamma2, g3 = pr.gamma3;
  Preset p{two_layer_law(pr.u_min, pr.u_max), CoefficientSpec::affine(0.0, 0.0, pr.sigma0, 0.0), {}};
  p.cost.f = [g1, g2](double, double, double y, double u) { return g1 * y + g2 * u * u; };
  p.cost.f_y = [g1](double, double, double, double) { return g1; };
  p.cost.f_u = [g2](double, double, double, double u) { return 2.0 * g2 * u; };
  p.cost.g = [g3](double y) { return g3 * y * y; };
  p.cost.g_y = [g3](double y) { return 2.0 * g3 * y; };
  p.cost.domain_lo = pr.cost_lo;
  p.cost.domain_hi = pr.cost_hi;
  return p;
}

Preset make_preset(const std::string& name, const PresetParams& params) {
  if (name == "temp-control") return temp_control(params);
  if (name == "heat-storage") return heat_storage(params);
  throw std::invalid_argument("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"temp-control", "heat-storage"}; }

}  // namespace spdectl
