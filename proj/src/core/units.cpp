#include "ionwalk/units.hpp"

#include <cmath>

#include "ionwalk/error.hpp"

namespace ionwalk {

UnitSystem UnitSystem::from_trap(double omega0, double eta, double mass) {
  UnitSystem u;
  u.omega0 = omega0;
  u.eta = eta;
  u.x0 = std::sqrt(kHbar / (2.0 * mass * omega0));
  u.k = eta / u.x0;
  u.validate();
  return u;
}

void UnitSystem::validate() const {
  if (!(omega0 > 0.0) || !(x0 > 0.0) || !(eta > 0.0)) {
    throw Error("UnitSystem: omega0, x0 and eta must be positive");
  }
  if (std::abs(k * x0 - eta) > 1e-12 * eta) {
    throw Error("UnitSystem: eta must equal k * x0");
  }
}

}  // namespace ionwalk
