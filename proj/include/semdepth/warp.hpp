#pragma once

#include <utility>

#include "semdepth/camera.hpp"
#include "semdepth/raster.hpp"

namespace semdepth {

// Sampling domain is the closed box [0, W-1] x [0, H-1]; a coordinate is
// valid iff it lies inside it (all four bilinear taps of the clamped cell
// are then in bounds). Coordinates within 1e-9 of the integer lattice are
// snapped onto it so identity warps reproduce the source bit-exactly.
double snap_lattice(double x);

// One bilinear cell. Interior cells are right-continuous (base tap =
// floor), the far border uses the left cell with weight 1.
struct SampleCell {
  int u0 = 0, v0 = 0;
  double wu = 0.0, wv = 0.0;
  bool valid = false;
  // 0 when the coordinate was clamped onto the box (or the axis has a
  // single pixel); kills the coordinate derivative on that axis.
  double grad_scale_u = 1.0, grad_scale_v = 1.0;
};

SampleCell make_cell(int height, int width, double u, double v,
                     bool clamp_coords = false);

double cell_value(const Raster<double>& src, const SampleCell& c, int channel = 0);
// d(value)/du and d(value)/dv for the cell, subgradient at lattice lines.
void cell_grad(const Raster<double>& src, const SampleCell& c, int channel,
               double* du, double* dv);

uint8_t nearest_value(const LabelMap& src, double u, double v);

// coords has two channels (u, v). Invalid output pixels hold zeros.
std::pair<Raster<double>, Mask> bilinear_sample(const Raster<double>& src,
                                                const Raster<double>& coords);
std::pair<LabelMap, Mask> nearest_sample(const LabelMap& src,
                                         const Raster<double>& coords);
std::pair<DepthMap, Mask> sample_depth(const DepthMap& src,
                                       const Raster<double>& coords);

// Projection of every target pixel into a source view (Eq.-1 chain applied
// to the whole raster).
struct WarpField {
  Raster<double> coords;  // 2 channels (u, v); meaningless where !in_front
  Mask in_front;
  Mask valid;  // in_front and inside the source sampling box
};

WarpField project_depth_map(const Intrinsics& k, const PoseSE3& target_to_source,
                            const DepthMap& target_depth, int src_height,
                            int src_width);

std::pair<Image, Mask> synthesize_view(const Image& source, const DepthMap& target_depth,
                                       const Intrinsics& k, const PoseSE3& target_to_source);
std::pair<LabelMap, Mask> synthesize_labels(const LabelMap& source, const DepthMap& target_depth,
                                            const Intrinsics& k, const PoseSE3& target_to_source);

}  // namespace semdepth
