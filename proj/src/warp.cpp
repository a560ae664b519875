#include "semdepth/warp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semdepth {

double snap_lattice(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

SampleCell make_cell(int height, int width, double u, double v, bool clamp_coords) {
  SampleCell c;
  u = snap_lattice(u);
  v = snap_lattice(v);
  c.valid = std::isfinite(u) && std::isfinite(v) &&
            u >= 0.0 && u <= static_cast<double>(width - 1) &&
            v >= 0.0 && v <= static_cast<double>(height - 1);
  if (!c.valid && !clamp_coords) return c;
  if (!c.valid) {
    const double uc = std::clamp(u, 0.0, static_cast<double>(width - 1));
    const double vc = std::clamp(v, 0.0, static_cast<double>(height - 1));
    if (uc != u) c.grad_scale_u = 0.0;
    if (vc != v) c.grad_scale_v = 0.0;
    u = uc;
    v = vc;
  }
  if (width == 1) {
    c.u0 = 0;
    c.wu = 0.0;
    c.grad_scale_u = 0.0;
  } else {
    c.u0 = std::min(static_cast<int>(std::floor(u)), width - 2);
    c.wu = u - c.u0;
  }
  if (height == 1) {
    c.v0 = 0;
    c.wv = 0.0;
    c.grad_scale_v = 0.0;
  } else {
    c.v0 = std::min(static_cast<int>(std::floor(v)), height - 2);
    c.wv = v - c.v0;
  }
  return c;
}

double cell_value(const Raster<double>& src, const SampleCell& c, int channel) {
  const int u1 = std::min(c.u0 + 1, src.width() - 1);
  const int v1 = std::min(c.v0 + 1, src.height() - 1);
  const double a = src.at(c.v0, c.u0, channel);
  const double b = src.at(c.v0, u1, channel);
  const double d = src.at(v1, c.u0, channel);
  const double e = src.at(v1, u1, channel);
  return (1.0 - c.wv) * ((1.0 - c.wu) * a + c.wu * b) +
         c.wv * ((1.0 - c.wu) * d + c.wu * e);
}

void cell_grad(const Raster<double>& src, const SampleCell& c, int channel,
               double* du, double* dv) {
  const int u1 = std::min(c.u0 + 1, src.width() - 1);
  const int v1 = std::min(c.v0 + 1, src.height() - 1);
  const double a = src.at(c.v0, c.u0, channel);
  const double b = src.at(c.v0, u1, channel);
  const double d = src.at(v1, c.u0, channel);
  const double e = src.at(v1, u1, channel);
  *du = ((1.0 - c.wv) * (b - a) + c.wv * (e - d)) * c.grad_scale_u;
  *dv = ((1.0 - c.wu) * (d - a) + c.wu * (e - b)) * c.grad_scale_v;
}

uint8_t nearest_value(const LabelMap& src, double u, double v) {
  // ties round half away from zero, which std::round does
  const int ui = static_cast<int>(std::round(u));
  const int vi = static_cast<int>(std::round(v));
  return src.at(std::clamp(vi, 0, src.height() - 1),
                std::clamp(ui, 0, src.width() - 1));
}

namespace {

void check_coords(const Raster<double>& coords) {
  if (coords.channels() != 2)
    throw std::invalid_argument("coords raster must have 2 channels (u, v)");
}

}  // namespace

std::pair<Raster<double>, Mask> bilinear_sample(const Raster<double>& src,
                                                const Raster<double>& coords) {
  check_coords(coords);
  Raster<double> out(coords.height(), coords.width(), src.channels(), 0.0);
  Mask valid(coords.height(), coords.width(), 1, 0);
  for (int v = 0; v < coords.height(); ++v) {
    for (int u = 0; u < coords.width(); ++u) {
      const SampleCell c =
          make_cell(src.height(), src.width(), coords.at(v, u, 0), coords.at(v, u, 1));
      if (!c.valid) continue;
      valid.at(v, u) = 1;
      for (int ch = 0; ch < src.channels(); ++ch)
        out.at(v, u, ch) = cell_value(src, c, ch);
    }
  }
  return {std::move(out), std::move(valid)};
}

std::pair<LabelMap, Mask> nearest_sample(const LabelMap& src,
                                         const Raster<double>& coords) {
  check_coords(coords);
  LabelMap out(coords.height(), coords.width(), 1, 0);
  Mask valid(coords.height(), coords.width(), 1, 0);
  for (int v = 0; v < coords.height(); ++v) {
    for (int u = 0; u < coords.width(); ++u) {
      const double su = snap_lattice(coords.at(v, u, 0));
      const double sv = snap_lattice(coords.at(v, u, 1));
      if (!(std::isfinite(su) && std::isfinite(sv)) || su < 0.0 ||
          su > src.width() - 1.0 || sv < 0.0 || sv > src.height() - 1.0)
        continue;
      valid.at(v, u) = 1;
      out.at(v, u) = nearest_value(src, su, sv);
    }
  }
  return {std::move(out), std::move(valid)};
}

std::pair<DepthMap, Mask> sample_depth(const DepthMap& src,
                                       const Raster<double>& coords) {
  return bilinear_sample(src, coords);
}

WarpField project_depth_map(const Intrinsics& k, const PoseSE3& target_to_source,
                            const DepthMap& target_depth, int src_height,
                            int src_width) {
  const int h = target_depth.height();
  const int w = target_depth.width();
  WarpField field;
  field.coords = Raster<double>(h, w, 2, 0.0);
  field.in_front = Mask(h, w, 1, 0);
  field.valid = Mask(h, w, 1, 0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Projection proj = project_pixel(
          k, target_to_source, target_depth.at(v, u),
          Pixel{static_cast<double>(u), static_cast<double>(v)});
      if (!proj.in_front) continue;
      field.in_front.at(v, u) = 1;
      field.coords.at(v, u, 0) = proj.pixel.u;
      field.coords.at(v, u, 1) = proj.pixel.v;
      const double su = snap_lattice(proj.pixel.u);
      const double sv = snap_lattice(proj.pixel.v);
      if (su >= 0.0 && su <= src_width - 1.0 && sv >= 0.0 && sv <= src_height - 1.0)
        field.valid.at(v, u) = 1;
    }
  }
  return field;
}

std::pair<Image, Mask> synthesize_view(const Image& source, const DepthMap& target_depth,
                                       const Intrinsics& k, const PoseSE3& target_to_source) {
  WarpField field =
      project_depth_map(k, target_to_source, target_depth, source.height(), source.width());
  auto [values, sample_valid] = bilinear_sample(source, field.coords);
  for (int v = 0; v < sample_valid.height(); ++v)
    for (int u = 0; u < sample_valid.width(); ++u)
      if (!field.in_front.at(v, u)) {
        sample_valid.at(v, u) = 0;
        for (int c = 0; c < values.channels(); ++c) values.at(v, u, c) = 0.0;
      }
  return {std::move(values), std::move(sample_valid)};
}

std::pair<LabelMap, Mask> synthesize_labels(const LabelMap& source, const DepthMap& target_depth,
                                            const Intrinsics& k, const PoseSE3& target_to_source) {
  WarpField field =
      project_depth_map(k, target_to_source, target_depth, source.height(), source.width());
  auto [labels, sample_valid] = nearest_sample(source, field.coords);
  for (int v = 0; v < sample_valid.height(); ++v)
    for (int u = 0; u < sample_valid.width(); ++u)
      if (!field.in_front.at(v, u)) {
        sample_valid.at(v, u) = 0;
        labels.at(v, u) = 0;
      }
  return {std::move(labels), std::move(sample_valid)};
}

}  // namespace semdepth
