#pragma once

#include <cstdint>
#include <vector>

#include "eptrecon/constants.hpp"
#include "eptrecon/grid.hpp"

namespace eptrecon {

struct DirectResult {
  ComplexField gamma;               // NaN on masked nodes
  std::vector<std::uint8_t> mask;  // 1 where |H⁺| < guard * max|H⁺|
  RealField sigma;                  // Re γ
  RealField eps;                    // Im γ / ω, F/m
};

// Local-homogeneity formula γ = ΔH⁺ / (iωμ₀H⁺), node by node. Face nodes use
// the one-sided Laplacian.
DirectResult direct_reconstruct(const ComplexField& hplus, const Physics& phys, double guard = 1e-3);

}  // namespace eptrecon
