#include <algorithm>
#include <cmath>

#include "frozen_internal.hpp"
#include "semdepth/losses.hpp"

namespace semdepth {

namespace {

using detail::kMinFrozenZ;
using detail::kSsimC1;
using detail::kSsimC2;

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// dL/d(warped image) for one source: L1 part plus the windowed-SSIM
// adjoint. upstream holds dL/d(re) per pixel.
Image recon_error_backward(const Image& target, const Image& warped,
                           const SsimStats& st, const Raster<double>& upstream,
                           double alpha) {
  const int h = target.height(), w = target.width(), nc = target.channels();
  Image d_warped(h, w, nc, 0.0);

  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const double g = upstream.at(v, u);
      if (g == 0.0) continue;
      const double s = g * (1.0 - alpha) / nc;
      for (int c = 0; c < nc; ++c)
        d_warped.at(v, u, c) += s * sign(warped.at(v, u, c) - target.at(v, u, c));
    }

  // SSIM part: re = alpha/2 (1 - mean_c S_c) + ...
  for (int c = 0; c < nc; ++c) {
    Raster<double> x_mu(h, w, 1), x_var(h, w, 1), x_cov(h, w, 1);
    Raster<double> x_var_mb(h, w, 1), x_cov_ma(h, w, 1);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        const double lam = upstream.at(v, u) * (-0.5 * alpha) / nc;
        if (lam == 0.0) {
          x_mu.at(v, u) = x_var.at(v, u) = x_cov.at(v, u) = 0.0;
          x_var_mb.at(v, u) = x_cov_ma.at(v, u) = 0.0;
          continue;
        }
        const double ma = st.mu_a.at(v, u, c), mb = st.mu_b.at(v, u, c);
        const double va = st.var_a.at(v, u, c), vb = st.var_b.at(v, u, c);
        const double cv = st.cov.at(v, u, c);
        const double n1 = 2.0 * ma * mb + kSsimC1;
        const double n2 = 2.0 * cv + kSsimC2;
        const double d1 = ma * ma + mb * mb + kSsimC1;
        const double d2 = va + vb + kSsimC2;
        const double s_c = (n1 * n2) / (d1 * d2);
        const double p_mu = 2.0 * ma * n2 / (d1 * d2) - s_c * 2.0 * mb / d1;
        const double p_var = -s_c / d2;
        const double p_cov = 2.0 * n1 / (d1 * d2);
        x_mu.at(v, u) = lam * p_mu;
        x_var.at(v, u) = lam * p_var;
        x_cov.at(v, u) = lam * p_cov;
        x_var_mb.at(v, u) = lam * p_var * mb;
        x_cov_ma.at(v, u) = lam * p_cov * ma;
      }
    const Raster<double> a_mu = box3_reflect_adjoint(x_mu);
    const Raster<double> a_var = box3_reflect_adjoint(x_var);
    const Raster<double> a_var_mb = box3_reflect_adjoint(x_var_mb);
    const Raster<double> a_cov = box3_reflect_adjoint(x_cov);
    const Raster<double> a_cov_ma = box3_reflect_adjoint(x_cov_ma);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u)
        d_warped.at(v, u, c) +=
            a_mu.at(v, u) +
            2.0 * (warped.at(v, u, c) * a_var.at(v, u) - a_var_mb.at(v, u)) +
            (target.at(v, u, c) * a_cov.at(v, u) - a_cov_ma.at(v, u));
  }
  return d_warped;
}

}  // namespace

SnippetGradient frozen_gradient(const SnippetView& view, const LossOptions& opts,
                                const FrozenSelection& sel) {
  const detail::FrozenForward f = detail::frozen_forward(view, opts, sel);
  const Image& it = *view.image;
  const DepthMap& dt = *view.depth;
  const int h = it.height(), w = it.width();
  const size_t ns = view.sources.size();
  const LossWeights& lw = opts.weights;

  SnippetGradient g;
  g.d_target_depth = Raster<double>(h, w, 1, 0.0);
  g.d_source_depth.assign(ns, Raster<double>(h, w, 1, 0.0));
  for (size_t s = 0; s < ns; ++s)
    g.d_source_depth[s] =
        Raster<double>(view.sources[s].depth->height(), view.sources[s].depth->width(), 1, 0.0);
  g.d_pose.assign(ns, Vec6::Zero());

  const bool do_img = opts.enable_img && sel.img_count > 0;
  const bool do_p3d = opts.enable_p3d && sel.p3d_count > 0;
  const double c_img = do_img ? lw.lambda_img / sel.img_count : 0.0;
  const double c_p3d = do_p3d ? lw.lambda_p3d / sel.p3d_count : 0.0;

  for (size_t s = 0; s < ns; ++s) {
    const SnippetSource& src = view.sources[s];
    const Mat3 rot_fwd = src.target_to_source.rotation;
    const Vec3 omega = src.pose_param.head<3>();
    const Mat3 jr = so3_right_jacobian(omega);
    const PoseSE3 param_pose = exp6(src.pose_param);  // (R, u) of the variable
    const Mat3& rot_param = param_pose.rotation;

    // accumulated dL/d(u', v') per target pixel
    Raster<double> g_coords(h, w, 2, 0.0);

    if (do_img) {
      Raster<double> upstream(h, w, 1, 0.0);
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
          if (sel.img_gate.at(v, u) && sel.img_source.at(v, u) == static_cast<int>(s))
            upstream.at(v, u) = c_img;
      Image d_warped = recon_error_backward(it, f.warped[s], f.stats[s], upstream, lw.alpha);
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
          if (!sel.warp_valid[s].at(v, u)) continue;  // fill pixels are constant
          const SampleCell cell =
              make_cell(src.image->height(), src.image->width(),
                        f.coords[s].at(v, u, 0), f.coords[s].at(v, u, 1), true);
          double gu = 0.0, gv = 0.0;
          for (int c = 0; c < it.channels(); ++c) {
            const double gw = d_warped.at(v, u, c);
            if (gw == 0.0) continue;
            double du, dv;
            cell_grad(*src.image, cell, c, &du, &dv);
            gu += gw * du;
            gv += gw * dv;
          }
          g_coords.at(v, u, 0) += gu;
          g_coords.at(v, u, 1) += gv;
        }
    }

    if (do_p3d) {
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
          if (!sel.p3d_gate.at(v, u) || sel.p3d_source.at(v, u) != static_cast<int>(s))
            continue;
          const Vec3 sign3(f.pe_sign[s].at(v, u, 0), f.pe_sign[s].at(v, u, 1),
                           f.pe_sign[s].at(v, u, 2));
          const Vec3 ray = pixel_ray(view.k, Pixel{static_cast<double>(u),
                                                   static_cast<double>(v)});
          const Vec3 g_pt = c_p3d * sign3;      // d/d P_t
          const Vec3 g_phat = -c_p3d * sign3;   // d/d P_hat

          g.d_target_depth.at(v, u) += g_pt.dot(ray);

          // P_hat = A P' + c with (A, c) = inverse(target_to_source)
          const Vec3 g_pprime = rot_fwd * g_phat;  // A^T = rot_fwd

          const double cu = f.coords[s].at(v, u, 0);
          const double cv = f.coords[s].at(v, u, 1);
          const SampleCell cell =
              make_cell(src.depth->height(), src.depth->width(), cu, cv, true);
          const double d_sample = f.sampled_depth[s].at(v, u);
          const Vec3 ray_src = pixel_ray(view.k, Pixel{snap_lattice(cu), snap_lattice(cv)});

          const double g_d = g_pprime.dot(ray_src);  // dP'/dd' = ray_src
          double gu = g_pprime.x() * d_sample / view.k.fx;
          double gv = g_pprime.y() * d_sample / view.k.fy;

          double ddu, ddv;
          cell_grad(*src.depth, cell, 0, &ddu, &ddv);
          gu += g_d * ddu;
          gv += g_d * ddv;

          // scatter d' taps into the source depth gradient
          const int u1 = std::min(cell.u0 + 1, src.depth->width() - 1);
          const int v1 = std::min(cell.v0 + 1, src.depth->height() - 1);
          g.d_source_depth[s].at(cell.v0, cell.u0) += g_d * (1.0 - cell.wu) * (1.0 - cell.wv);
          g.d_source_depth[s].at(cell.v0, u1) += g_d * cell.wu * (1.0 - cell.wv);
          g.d_source_depth[s].at(v1, cell.u0) += g_d * (1.0 - cell.wu) * cell.wv;
          g.d_source_depth[s].at(v1, u1) += g_d * cell.wu * cell.wv;

          g_coords.at(v, u, 0) += gu;
          g_coords.at(v, u, 1) += gv;

          // pose through the P_hat path
          const Vec3 pprime = d_sample * ray_src;
          const Vec3 phat = inverse(src.target_to_source).apply(pprime);
          if (src.param_forward) {
            g.d_pose[s].head<3>() += -jr.transpose() * (skew(phat) * g_phat);
            g.d_pose[s].tail<3>() += -(rot_param * g_phat);
          } else {
            g.d_pose[s].head<3>() += jr.transpose() * (skew(pprime) * (rot_param.transpose() * g_phat));
            g.d_pose[s].tail<3>() += g_phat;
          }
        }
    }

    // coords -> camera point Q -> depth and pose
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        const double gu = g_coords.at(v, u, 0);
        const double gv = g_coords.at(v, u, 1);
        if (gu == 0.0 && gv == 0.0) continue;
        const Vec3 ray = pixel_ray(view.k, Pixel{static_cast<double>(u),
                                                 static_cast<double>(v)});
        const Vec3 pt = dt.at(v, u) * ray;
        Vec3 q = src.target_to_source.apply(pt);
        const bool z_clamped = q.z() < kMinFrozenZ;
        if (z_clamped) q.z() = kMinFrozenZ;
        Vec3 g_q;
        g_q.x() = gu * view.k.fx / q.z();
        g_q.y() = gv * view.k.fy / q.z();
        g_q.z() = z_clamped ? 0.0
                            : -(gu * view.k.fx * q.x() + gv * view.k.fy * q.y()) /
                                  (q.z() * q.z());

        g.d_target_depth.at(v, u) += g_q.dot(rot_fwd * ray);

        if (src.param_forward) {
          // Q = R P + u
          g.d_pose[s].head<3>() += jr.transpose() * (skew(pt) * (rot_param.transpose() * g_q));
          g.d_pose[s].tail<3>() += g_q;
        } else {
          // Q = R^T (P - u)
          g.d_pose[s].head<3>() += -jr.transpose() * (skew(q) * g_q);
          g.d_pose[s].tail<3>() += -(rot_param * g_q);
        }
      }
  }

  if (opts.enable_smooth) {
    const double c = lw.lambda_smooth / (static_cast<double>(h) * w);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        if (u + 1 < w) {
          double gi = 0.0;
          for (int c2 = 0; c2 < it.channels(); ++c2)
            gi += std::abs(it.at(v, u + 1, c2) - it.at(v, u, c2));
          gi /= it.channels();
          const double sg = sign(dt.at(v, u + 1) - dt.at(v, u)) * std::exp(-gi) * c;
          g.d_target_depth.at(v, u + 1) += sg;
          g.d_target_depth.at(v, u) -= sg;
        }
        if (v + 1 < h) {
          double gi = 0.0;
          for (int c2 = 0; c2 < it.channels(); ++c2)
            gi += std::abs(it.at(v + 1, u, c2) - it.at(v, u, c2));
          gi /= it.channels();
          const double sg = sign(dt.at(v + 1, u) - dt.at(v, u)) * std::exp(-gi) * c;
          g.d_target_depth.at(v + 1, u) += sg;
          g.d_target_depth.at(v, u) -= sg;
        }
      }
  }

  if (opts.enable_road) {
    auto is_road = [&opts](uint8_t c) {
      return std::find(opts.road_classes.begin(), opts.road_classes.end(), c) !=
             opts.road_classes.end();
    };
    const double c = lw.lambda_road / (static_cast<double>(h) * w);
    for (int v = 1; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        if (!is_road(view.labels->at(v, u)) || !is_road(view.labels->at(v - 1, u))) continue;
        if (dt.at(v, u) - dt.at(v - 1, u) > 0.0) {
          g.d_target_depth.at(v, u) += c;
          g.d_target_depth.at(v - 1, u) -= c;
        }
      }
  }

  return g;
}

}  // namespace semdepth
