#pragma once

#include <string>
#include <vector>

#include "spdectl/control.hpp"

namespace spdectl {

/// Parameters shared by the built-in control examples.
struct PresetParams {
  double theta = 1.0;   // temp-control: weight of u^2
  double gamma = 1.0;   // temp-control: terminal weight
  double gamma1 = 1.0;  // heat-storage: running state weight
  double gamma2 = 1.0;  // heat-storage: weight of u^2
  double gamma3 = 1.0;  // heat-storage: terminal weight
  double sigma0 = 0.5;
  double u_min = 0.1, u_max = 2.0;
  double cost_lo = -1.0, cost_hi = 1.0;
};

struct Preset {
  ControlledMaterialLaw law;
  CoefficientSpec coeffs;
  CostSpec cost;
};

/// a = u for x <= 0 and 1 + u for x > 0, unit density, additive noise sigma0.
ControlledMaterialLaw two_layer_law(double u_min, double u_max);

/// "temp-control": f = y^2 + theta u^2, g = gamma y^2.
Preset temp_control(const PresetParams& params);
/// "heat-storage": f = gamma1 y + gamma2 u^2, g = gamma3 y^2.
Preset heat_storage(const PresetParams& params);

/// Looks up a preset by name; throws std::invalid_argument for unknown names.
Preset make_preset(const std::string& name, const PresetParams& params);
std::vector<std::string> preset_names();

}  // namespace spdectl
