#include "semdepth/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "frozen_internal.hpp"

namespace semdepth {

namespace {

using detail::kMinFrozenZ;
using detail::kSsimC1;
using detail::kSsimC2;

// reflect without repeating the border pixel: -1 -> 1, n -> n-2
int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

void check_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("image shapes differ");
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

SnippetSource make_source(const Image& img, const LabelMap& lab, const DepthMap& dep,
                          const Vec6& pose_param, bool param_forward) {
  SnippetSource s;
  s.image = &img;
  s.labels = &lab;
  s.depth = &dep;
  s.pose_param = pose_param;
  s.param_forward = param_forward;
  const PoseSE3 t = exp6(pose_param);
  s.target_to_source = param_forward ? t : inverse(t);
  return s;
}

Raster<double> box3_reflect(const Raster<double>& x) {
  Raster<double> out(x.height(), x.width(), x.channels());
  for (int v = 0; v < x.height(); ++v)
    for (int u = 0; u < x.width(); ++u)
      for (int c = 0; c < x.channels(); ++c) {
        double s = 0.0;
        for (int dv = -1; dv <= 1; ++dv)
          for (int du = -1; du <= 1; ++du)
            s += x.at(reflect(v + dv, x.height()), reflect(u + du, x.width()), c);
        out.at(v, u, c) = s / 9.0;
      }
  return out;
}

Raster<double> box3_reflect_adjoint(const Raster<double>& x) {
  Raster<double> out(x.height(), x.width(), x.channels(), 0.0);
  for (int v = 0; v < x.height(); ++v)
    for (int u = 0; u < x.width(); ++u)
      for (int c = 0; c < x.channels(); ++c) {
        const double s = x.at(v, u, c) / 9.0;
        for (int dv = -1; dv <= 1; ++dv)
          for (int du = -1; du <= 1; ++du)
            out.at(reflect(v + dv, x.height()), reflect(u + du, x.width()), c) += s;
      }
  return out;
}

SsimStats ssim_stats(const Image& a, const Image& b) {
  check_same_shape(a, b);
  const int h = a.height(), w = a.width(), nc = a.channels();
  Raster<double> aa(h, w, nc), bb(h, w, nc), ab(h, w, nc);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      for (int c = 0; c < nc; ++c) {
        const double x = a.at(v, u, c), y = b.at(v, u, c);
        aa.at(v, u, c) = x * x;
        bb.at(v, u, c) = y * y;
        ab.at(v, u, c) = x * y;
      }
  SsimStats st;
  st.mu_a = box3_reflect(a);
  st.mu_b = box3_reflect(b);
  Raster<double> m_aa = box3_reflect(aa), m_bb = box3_reflect(bb), m_ab = box3_reflect(ab);
  st.var_a = Raster<double>(h, w, nc);
  st.var_b = Raster<double>(h, w, nc);
  st.cov = Raster<double>(h, w, nc);
  st.ssim = Raster<double>(h, w, 1);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int c = 0; c < nc; ++c) {
        const double ma = st.mu_a.at(v, u, c), mb = st.mu_b.at(v, u, c);
        const double va = m_aa.at(v, u, c) - ma * ma;
        const double vb = m_bb.at(v, u, c) - mb * mb;
        const double cv = m_ab.at(v, u, c) - ma * mb;
        st.var_a.at(v, u, c) = va;
        st.var_b.at(v, u, c) = vb;
        st.cov.at(v, u, c) = cv;
        const double n1 = 2.0 * ma * mb + kSsimC1;
        const double n2 = 2.0 * cv + kSsimC2;
        const double d1 = ma * ma + mb * mb + kSsimC1;
        const double d2 = va + vb + kSsimC2;
        acc += (n1 * n2) / (d1 * d2);
      }
      st.ssim.at(v, u) = acc / nc;
    }
  return st;
}

Raster<double> ssim(const Image& a, const Image& b) { return ssim_stats(a, b).ssim; }

Raster<double> recon_error(const Image& target, const Image& reconstruction, double alpha) {
  check_same_shape(target, reconstruction);
  const Raster<double> s = ssim(target, reconstruction);
  Raster<double> re(target.height(), target.width(), 1);
  for (int v = 0; v < target.height(); ++v)
    for (int u = 0; u < target.width(); ++u) {
      double l1 = 0.0;
      for (int c = 0; c < target.channels(); ++c)
        l1 += std::abs(target.at(v, u, c) - reconstruction.at(v, u, c));
      l1 /= target.channels();
      re.at(v, u) = 0.5 * alpha * (1.0 - s.at(v, u)) + (1.0 - alpha) * l1;
    }
  return re;
}

double recon_loss(const Image& target, const Image& reconstruction, double alpha,
                  const Mask* valid) {
  const Raster<double> re = recon_error(target, reconstruction, alpha);
  double sum = 0.0;
  int64_t n = 0;
  for (int v = 0; v < re.height(); ++v)
    for (int u = 0; u < re.width(); ++u) {
      if (valid && !valid->at(v, u)) continue;
      sum += re.at(v, u);
      ++n;
    }
  return n == 0 ? 0.0 : sum / n;
}

Mask automask(const Image& target, const std::vector<Raster<double>>& warped_re,
              const std::vector<Raster<double>>& identity_re,
              const std::vector<Mask>& warp_valid) {
  const int h = target.height(), w = target.width();
  Mask mu(h, w, 1, 0);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double best_warp = std::numeric_limits<double>::infinity();
      bool any = false;
      for (size_t s = 0; s < warped_re.size(); ++s) {
        if (!warp_valid[s].at(v, u)) continue;
        any = true;
        best_warp = std::min(best_warp, warped_re[s].at(v, u));
      }
      if (!any) continue;
      double best_ident = std::numeric_limits<double>::infinity();
      for (const auto& ire : identity_re) best_ident = std::min(best_ident, ire.at(v, u));
      if (best_warp < best_ident) mu.at(v, u) = 1;
    }
  return mu;
}

MaskedImageLoss masked_image_loss(const std::vector<Raster<double>>& warped_re,
                                  const std::vector<Raster<double>>& identity_re,
                                  const std::vector<Mask>& warp_valid,
                                  const std::vector<Mask>& sem_masks,
                                  double photo_mask_penalty) {
  const int h = warped_re.at(0).height(), w = warped_re.at(0).width();
  MaskedImageLoss out;
  out.min_mre = Raster<double>(h, w, 1, 0.0);
  out.gate = Mask(h, w, 1, 0);
  out.source = IndexMap(h, w, 1, -1);
  double sum = 0.0;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double best = std::numeric_limits<double>::infinity();
      int best_s = -1;
      for (size_t s = 0; s < warped_re.size(); ++s) {
        if (!warp_valid[s].at(v, u)) continue;
        const double mre = warped_re[s].at(v, u) +
                           photo_mask_penalty * (sem_masks[s].at(v, u) ? 1.0 : 0.0);
        if (mre < best) {
          best = mre;
          best_s = static_cast<int>(s);
        }
      }
      if (best_s < 0) continue;
      double best_ident = std::numeric_limits<double>::infinity();
      for (const auto& ire : identity_re) best_ident = std::min(best_ident, ire.at(v, u));
      if (!(best < best_ident)) continue;
      out.gate.at(v, u) = 1;
      out.source.at(v, u) = best_s;
      out.min_mre.at(v, u) = best;
      sum += best;
      ++out.count;
    }
  out.value = out.count == 0 ? 0.0 : sum / out.count;
  return out;
}

double min_reprojection_loss(const std::vector<Raster<double>>& warped_re,
                             const std::vector<Raster<double>>& identity_re,
                             const std::vector<Mask>& warp_valid, int64_t* count) {
  const int h = warped_re.at(0).height(), w = warped_re.at(0).width();
  double sum = 0.0;
  int64_t n = 0;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double best = std::numeric_limits<double>::infinity();
      bool any = false;
      for (size_t s = 0; s < warped_re.size(); ++s) {
        if (!warp_valid[s].at(v, u)) continue;
        any = true;
        best = std::min(best, warped_re[s].at(v, u));
      }
      if (!any) continue;
      double best_ident = std::numeric_limits<double>::infinity();
      for (const auto& ire : identity_re) best_ident = std::min(best_ident, ire.at(v, u));
      if (best < best_ident) {
        sum += best;
        ++n;
      }
    }
  if (count) *count = n;
  return n == 0 ? 0.0 : sum / n;
}

double smoothness_loss(const DepthMap& depth, const Image& image) {
  if (depth.height() != image.height() || depth.width() != image.width())
    throw std::invalid_argument("smoothness_loss: shapes differ");
  const int h = depth.height(), w = depth.width();
  const int nc = image.channels();
  double sum = 0.0;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (u + 1 < w) {
        double gi = 0.0;
        for (int c = 0; c < nc; ++c)
          gi += std::abs(image.at(v, u + 1, c) - image.at(v, u, c));
        gi /= nc;
        sum += std::abs(depth.at(v, u + 1) - depth.at(v, u)) * std::exp(-gi);
      }
      if (v + 1 < h) {
        double gi = 0.0;
        for (int c = 0; c < nc; ++c)
          gi += std::abs(image.at(v + 1, u, c) - image.at(v, u, c));
        gi /= nc;
        sum += std::abs(depth.at(v + 1, u) - depth.at(v, u)) * std::exp(-gi);
      }
    }
  return sum / (static_cast<double>(h) * w);
}

double semantic_loss(const LabelMap& target, const std::vector<LabelMap>& warped,
                     const std::vector<Mask>& warp_valid, int64_t* count) {
  const int h = target.height(), w = target.width();
  double sum = 0.0;
  int64_t n = 0;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (target.at(v, u) == kIgnoreLabel) continue;
      int best = 2;  // above any Iverson value
      for (size_t s = 0; s < warped.size(); ++s) {
        if (!warp_valid[s].at(v, u)) continue;
        const uint8_t lab = warped[s].at(v, u);
        const int mism = (lab == kIgnoreLabel || lab == target.at(v, u)) ? 0 : 1;
        best = std::min(best, mism);
      }
      if (best == 2) continue;  // no valid source
      sum += best;
      ++n;
    }
  if (count) *count = n;
  return n == 0 ? 0.0 : sum / n;
}

Mask semantic_mask(const LabelMap& target, const LabelMap& warped) {
  if (target.height() != warped.height() || target.width() != warped.width())
    throw std::invalid_argument("semantic_mask: shapes differ");
  Mask m(target.height(), target.width(), 1, 0);
  for (int v = 0; v < target.height(); ++v)
    for (int u = 0; u < target.width(); ++u) {
      const uint8_t a = target.at(v, u), b = warped.at(v, u);
      if (a == kIgnoreLabel || b == kIgnoreLabel) continue;
      if (a != b) m.at(v, u) = 1;
    }
  return m;
}

RoadOrderingLoss road_ordering_loss(const DepthMap& depth, const LabelMap& labels,
                                    const std::vector<uint8_t>& road_classes) {
  if (depth.height() != labels.height() || depth.width() != labels.width())
    throw std::invalid_argument("road_ordering_loss: shapes differ");
  auto is_road = [&road_classes](uint8_t c) {
    return std::find(road_classes.begin(), road_classes.end(), c) != road_classes.end();
  };
  RoadOrderingLoss out;
  const int h = depth.height(), w = depth.width();
  for (int v = 1; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (!is_road(labels.at(v, u)) || !is_road(labels.at(v - 1, u))) continue;
      const double diff = depth.at(v, u) - depth.at(v - 1, u);
      if (diff > 0.0) ++out.violations;
      out.hinge += std::max(0.0, diff);
    }
  const double n = static_cast<double>(h) * w;
  out.value = out.violations / n;
  out.hinge /= n;
  return out;
}

double point_error(const Vec3& a, const Vec3& b) {
  return (a - b).cwiseAbs().sum();
}

PointLoss3D point_loss_3d(const SnippetView& view, const std::vector<Mask>& sem_masks,
                          double point_mask_penalty) {
  const DepthMap& dt = *view.depth;
  const int h = dt.height(), w = dt.width();
  const size_t ns = view.sources.size();
  PointLoss3D out;
  out.pe.assign(ns, Raster<double>(h, w, 1, 0.0));
  out.gate = Mask(h, w, 1, 0);
  out.source = IndexMap(h, w, 1, -1);

  // per-source valid-sample mask + pe maps
  std::vector<Mask> valid(ns);
  for (size_t s = 0; s < ns; ++s) {
    const SnippetSource& src = view.sources[s];
    const PoseSE3 src_to_target = inverse(src.target_to_source);
    valid[s] = Mask(h, w, 1, 0);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        const Pixel p{static_cast<double>(u), static_cast<double>(v)};
        const Vec3 pt = backproject(view.k, p, dt.at(v, u));
        const Projection proj = project(view.k, src.target_to_source.apply(pt));
        if (!proj.in_front) continue;
        const SampleCell cell =
            make_cell(src.depth->height(), src.depth->width(), proj.pixel.u, proj.pixel.v);
        if (!cell.valid) continue;
        const double d = cell_value(*src.depth, cell);
        if (!(d > 0.0)) continue;
        const Vec3 ps = d * pixel_ray(view.k, Pixel{snap_lattice(proj.pixel.u),
                                                    snap_lattice(proj.pixel.v)});
        const Vec3 ps_in_target = src_to_target.apply(ps);
        valid[s].at(v, u) = 1;
        out.pe[s].at(v, u) = point_error(pt, ps_in_target);
      }
  }

  double sum = 0.0;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double best = std::numeric_limits<double>::infinity();
      int best_s = -1;
      for (size_t s = 0; s < ns; ++s) {
        if (!valid[s].at(v, u)) continue;
        const double mpe = out.pe[s].at(v, u) +
                           point_mask_penalty * (sem_masks[s].at(v, u) ? 1.0 : 0.0);
        if (mpe < best) {
          best = mpe;
          best_s = static_cast<int>(s);
        }
      }
      if (best_s < 0 || !(best < point_mask_penalty)) continue;
      out.gate.at(v, u) = 1;
      out.source.at(v, u) = best_s;
      sum += best;
      ++out.count;
    }
  out.value = out.count == 0 ? 0.0 : sum / out.count;
  return out;
}

namespace {

// Bilinear warp of the source image; pixels outside the valid set take
// the target's own value so SSIM windows near the border stay finite.
Image warp_image_filled(const Image& source, const WarpField& field, const Image& fill) {
  const int h = field.valid.height(), w = field.valid.width();
  Image out(h, w, source.channels());
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (field.valid.at(v, u)) {
        const SampleCell cell = make_cell(source.height(), source.width(),
                                          field.coords.at(v, u, 0), field.coords.at(v, u, 1));
        for (int c = 0; c < source.channels(); ++c)
          out.at(v, u, c) = cell_value(source, cell, c);
      } else {
        for (int c = 0; c < source.channels(); ++c) out.at(v, u, c) = fill.at(v, u, c);
      }
    }
  return out;
}

LabelMap warp_labels_filled(const LabelMap& source, const WarpField& field,
                            const LabelMap& fill) {
  const int h = field.valid.height(), w = field.valid.width();
  LabelMap out(h, w, 1, 0);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      out.at(v, u) = field.valid.at(v, u)
                         ? nearest_value(source, field.coords.at(v, u, 0),
                                         field.coords.at(v, u, 1))
                         : fill.at(v, u);
  return out;
}

}  // namespace

LossReport total_loss(const SnippetView& view, const LossOptions& opts) {
  if (view.sources.empty()) throw std::invalid_argument("total_loss: no source frames");
  const Image& it = *view.image;
  const LabelMap& st = *view.labels;
  const DepthMap& dt = *view.depth;
  const int h = it.height(), w = it.width();
  const size_t ns = view.sources.size();
  const LossWeights& lw = opts.weights;

  LossReport rep;
  rep.re.reserve(ns);
  rep.mre.reserve(ns);
  rep.sem_mask.reserve(ns);
  rep.warp_valid.reserve(ns);

  std::vector<Raster<double>> identity_re;
  std::vector<LabelMap> warped_labels;
  for (size_t s = 0; s < ns; ++s) {
    const SnippetSource& src = view.sources[s];
    const WarpField field = project_depth_map(view.k, src.target_to_source, dt,
                                              src.image->height(), src.image->width());
    const Image warped = warp_image_filled(*src.image, field, it);
    const LabelMap wlab = warp_labels_filled(*src.labels, field, st);
    rep.warp_valid.push_back(field.valid);
    rep.re.push_back(recon_error(it, warped, lw.alpha));
    identity_re.push_back(recon_error(it, *src.image, lw.alpha));
    Mask m = semantic_mask(st, wlab);
    if (!opts.use_semantic_mask) m.fill(0);
    for (int v = 0; v < h; ++v)  // masks are undefined off the valid set
      for (int u = 0; u < w; ++u)
        if (!field.valid.at(v, u)) m.at(v, u) = 0;
    rep.sem_mask.push_back(std::move(m));
    warped_labels.push_back(std::move(wlab));
  }

  for (size_t s = 0; s < ns; ++s) {
    Raster<double> mre(h, w, 1);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u)
        mre.at(v, u) = rep.re[s].at(v, u) +
                       lw.photo_mask_penalty * (rep.sem_mask[s].at(v, u) ? 1.0 : 0.0);
    rep.mre.push_back(std::move(mre));
  }

  rep.mu = automask(it, rep.re, identity_re, rep.warp_valid);

  MaskedImageLoss img =
      masked_image_loss(rep.re, identity_re, rep.warp_valid, rep.sem_mask, lw.photo_mask_penalty);
  rep.img = img.value;
  rep.img_count = img.count;
  rep.img_gate = std::move(img.gate);
  rep.img_source = std::move(img.source);

  rep.ss = semantic_loss(st, warped_labels, rep.warp_valid, &rep.ss_count);

  PointLoss3D p3d = point_loss_3d(view, rep.sem_mask, lw.point_mask_penalty);
  rep.p3d = p3d.value;
  rep.p3d_count = p3d.count;
  rep.pe = std::move(p3d.pe);
  rep.p3d_gate = std::move(p3d.gate);
  rep.p3d_source = std::move(p3d.source);

  const RoadOrderingLoss road = road_ordering_loss(dt, st, opts.road_classes);
  rep.road = road.value;
  rep.road_violations = road.violations;

  rep.smooth = smoothness_loss(dt, it);

  rep.total = (opts.enable_img ? lw.lambda_img * rep.img : 0.0) +
              (opts.enable_ss ? lw.lambda_ss * rep.ss : 0.0) +
              (opts.enable_p3d ? lw.lambda_p3d * rep.p3d : 0.0) +
              (opts.enable_road ? lw.lambda_road * rep.road : 0.0) +
              (opts.enable_smooth ? lw.lambda_smooth * rep.smooth : 0.0);
  return rep;
}

FrozenSelection freeze_selection(const SnippetView& view, const LossOptions& opts) {
  LossReport rep = total_loss(view, opts);
  FrozenSelection sel;
  sel.warp_valid = std::move(rep.warp_valid);
  sel.sem_mask = std::move(rep.sem_mask);
  sel.img_gate = std::move(rep.img_gate);
  sel.img_source = std::move(rep.img_source);
  sel.img_count = rep.img_count;
  sel.p3d_gate = std::move(rep.p3d_gate);
  sel.p3d_source = std::move(rep.p3d_source);
  sel.p3d_count = rep.p3d_count;
  sel.ss_value = rep.ss;
  return sel;
}

namespace detail {

FrozenForward frozen_forward(const SnippetView& view, const LossOptions& opts,
                             const FrozenSelection& sel) {
  const Image& it = *view.image;
  const DepthMap& dt = *view.depth;
  const int h = it.height(), w = it.width();
  const size_t ns = view.sources.size();
  const LossWeights& lw = opts.weights;

  FrozenForward f;
  f.coords.assign(ns, Raster<double>(h, w, 2, 0.0));
  f.sampled_depth.assign(ns, Raster<double>(h, w, 1, 0.0));
  f.pe_sign.assign(ns, Raster<double>(h, w, 3, 0.0));

  const bool need_img = opts.enable_img;
  const bool need_p3d = opts.enable_p3d;

  for (size_t s = 0; s < ns; ++s) {
    const SnippetSource& src = view.sources[s];
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        const Vec3 pt = backproject(view.k, Pixel{static_cast<double>(u),
                                                  static_cast<double>(v)},
                                    dt.at(v, u));
        Vec3 q = src.target_to_source.apply(pt);
        if (q.z() < kMinFrozenZ) q.z() = kMinFrozenZ;
        f.coords[s].at(v, u, 0) = view.k.fx * q.x() / q.z() + view.k.cx;
        f.coords[s].at(v, u, 1) = view.k.fy * q.y() / q.z() + view.k.cy;
      }

    if (need_img) {
      Image warped(h, w, it.channels());
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
          if (sel.warp_valid[s].at(v, u)) {
            const SampleCell cell =
                make_cell(src.image->height(), src.image->width(),
                          f.coords[s].at(v, u, 0), f.coords[s].at(v, u, 1), true);
            for (int c = 0; c < it.channels(); ++c)
              warped.at(v, u, c) = cell_value(*src.image, cell, c);
          } else {
            for (int c = 0; c < it.channels(); ++c) warped.at(v, u, c) = it.at(v, u, c);
          }
        }
      f.stats.push_back(ssim_stats(it, warped));
      Raster<double> re(h, w, 1);
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
          double l1 = 0.0;
          for (int c = 0; c < it.channels(); ++c)
            l1 += std::abs(it.at(v, u, c) - warped.at(v, u, c));
          l1 /= it.channels();
          re.at(v, u) =
              0.5 * lw.alpha * (1.0 - f.stats[s].ssim.at(v, u)) + (1.0 - lw.alpha) * l1;
        }
      f.re.push_back(std::move(re));
      f.warped.push_back(std::move(warped));
    } else {
      f.stats.emplace_back();
      f.re.emplace_back();
      f.warped.emplace_back();
    }
  }

  if (need_img && sel.img_count > 0) {
    double sum = 0.0;
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        if (!sel.img_gate.at(v, u)) continue;
        const int s = sel.img_source.at(v, u);
        sum += f.re[s].at(v, u) +
               lw.photo_mask_penalty * (sel.sem_mask[s].at(v, u) ? 1.0 : 0.0);
      }
    f.img = sum / sel.img_count;
  }

  if (need_p3d && sel.p3d_count > 0) {
    double sum = 0.0;
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        if (!sel.p3d_gate.at(v, u)) continue;
        const int s = sel.p3d_source.at(v, u);
        const SnippetSource& src = view.sources[s];
        const Vec3 pt = backproject(view.k, Pixel{static_cast<double>(u),
                                                  static_cast<double>(v)},
                                    dt.at(v, u));
        const double cu = f.coords[s].at(v, u, 0);
        const double cv = f.coords[s].at(v, u, 1);
        const SampleCell cell =
            make_cell(src.depth->height(), src.depth->width(), cu, cv, true);
        const double d = cell_value(*src.depth, cell);
        f.sampled_depth[s].at(v, u) = d;
        const Vec3 ps = d * pixel_ray(view.k, Pixel{snap_lattice(cu), snap_lattice(cv)});
        const Vec3 phat = inverse(src.target_to_source).apply(ps);
        const Vec3 diff = pt - phat;
        for (int a = 0; a < 3; ++a) f.pe_sign[s].at(v, u, a) = sign(diff[a]);
        sum += diff.cwiseAbs().sum() +
               lw.point_mask_penalty * (sel.sem_mask[s].at(v, u) ? 1.0 : 0.0);
      }
    f.p3d = sum / sel.p3d_count;
  }

  if (opts.enable_road)
    f.road_hinge = road_ordering_loss(dt, *view.labels, opts.road_classes).hinge;
  if (opts.enable_smooth) f.smooth = smoothness_loss(dt, it);
  return f;
}

}  // namespace detail

FrozenLoss frozen_loss(const SnippetView& view, const LossOptions& opts,
                       const FrozenSelection& sel) {
  const detail::FrozenForward f = detail::frozen_forward(view, opts, sel);
  FrozenLoss out;
  out.img = f.img;
  out.p3d = f.p3d;
  out.road_hinge = f.road_hinge;
  out.smooth = f.smooth;
  const LossWeights& lw = opts.weights;
  out.objective = (opts.enable_img ? lw.lambda_img * f.img : 0.0) +
                  (opts.enable_ss ? lw.lambda_ss * sel.ss_value : 0.0) +
                  (opts.enable_p3d ? lw.lambda_p3d * f.p3d : 0.0) +
                  (opts.enable_road ? lw.lambda_road * f.road_hinge : 0.0) +
                  (opts.enable_smooth ? lw.lambda_smooth * f.smooth : 0.0);
  return out;
}

}  // namespace semdepth
