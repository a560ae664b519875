#pragma once

// Internal to the loss/gradient translation units; not part of the API.

#include "semdepth/losses.hpp"

namespace semdepth::detail {

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr double kMinFrozenZ = 1e-6;

// Forward pass of the frozen objective with everything the backward pass
// reuses. Per-source rasters are empty when the owning term is disabled.
struct FrozenForward {
  std::vector<Raster<double>> coords;         // clamped-z projections, 2ch
  std::vector<Image> warped;                  // fill applied
  std::vector<SsimStats> stats;               // vs target
  std::vector<Raster<double>> re;
  std::vector<Raster<double>> sampled_depth;  // 3D term, 0 where ungated
  std::vector<Raster<double>> pe_sign;        // 3ch sign(P_t - P_hat) at gated pixels
  double img = 0.0, p3d = 0.0, road_hinge = 0.0, smooth = 0.0;
};

FrozenForward frozen_forward(const SnippetView& view, const LossOptions& opts,
                             const FrozenSelection& sel);

}  // namespace semdepth::detail
