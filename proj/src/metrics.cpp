#include "semdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semdepth {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double median_scale(const DepthMap& pred, const DepthMap& gt, const Mask& valid) {
  std::vector<double> pv, gv;
  for (int v = 0; v < gt.height(); ++v)
    for (int u = 0; u < gt.width(); ++u) {
      if (!valid.at(v, u)) continue;
      pv.push_back(pred.at(v, u));
      gv.push_back(gt.at(v, u));
    }
  if (pv.empty()) throw std::invalid_argument("median_scale: no valid gt pixels");
  const double mp = median(pv);
  if (mp == 0.0) throw std::invalid_argument("median_scale: zero predicted median");
  return median(gv) / mp;
}

DepthEvalResult depth_metrics(const DepthMap& pred, const DepthMap& gt, const Mask& valid,
                              double cap, bool apply_median_scaling) {
  if (!pred.same_shape(gt))
    throw std::invalid_argument("depth_metrics: shape mismatch");
  const double scale = apply_median_scaling ? median_scale(pred, gt, valid) : 1.0;

  DepthEvalResult r;
  double sum_abs_rel = 0.0, sum_sq_rel = 0.0, sum_sq = 0.0, sum_sq_log = 0.0;
  int64_t n_d1 = 0, n_d2 = 0, n_d3 = 0;
  for (int v = 0; v < gt.height(); ++v)
    for (int u = 0; u < gt.width(); ++u) {
      if (!valid.at(v, u)) continue;
      const double g = gt.at(v, u);
      if (g < kGtDepthFloor || g > cap) continue;
      const double d = std::max(pred.at(v, u) * scale, kGtDepthFloor);
      sum_abs_rel += std::abs(d - g) / g;
      sum_sq_rel += (d - g) * (d - g) / g;
      sum_sq += (d - g) * (d - g);
      const double dl = std::log(d) - std::log(g);
      sum_sq_log += dl * dl;
      const double ratio = std::max(d / g, g / d);
      if (ratio < 1.25) ++n_d1;
      if (ratio < 1.25 * 1.25) ++n_d2;
      if (ratio < 1.25 * 1.25 * 1.25) ++n_d3;
      ++r.n_pixels;
    }
  if (r.n_pixels == 0)
    throw std::invalid_argument("depth_metrics: no valid pixels under cap");
  const double n = static_cast<double>(r.n_pixels);
  r.abs_rel = sum_abs_rel / n;
  r.sq_rel = sum_sq_rel / n;
  r.rmse = std::sqrt(sum_sq / n);
  r.rmse_log = std::sqrt(sum_sq_log / n);
  r.delta1 = n_d1 / n;
  r.delta2 = n_d2 / n;
  r.delta3 = n_d3 / n;
  return r;
}

double ate_snippet(const Trajectory& pred, const Trajectory& gt) {
  const size_t n = pred.poses.size();
  if (n != gt.poses.size()) throw std::invalid_argument("ate_snippet: length mismatch");
  if (n < 2) throw std::invalid_argument("ate_snippet: need at least two poses");

  // re-anchor both at frame 0
  const PoseSE3 pred0_inv = inverse(pred.poses[0]);
  const PoseSE3 gt0_inv = inverse(gt.poses[0]);
  std::vector<Vec3> tp(n), tg(n);
  for (size_t i = 0; i < n; ++i) {
    tp[i] = compose(pred0_inv, pred.poses[i]).translation;
    tg[i] = compose(gt0_inv, gt.poses[i]).translation;
  }

  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    num += tp[i].dot(tg[i]);
    den += tp[i].squaredNorm();
  }
  const double s = den > 0.0 ? num / den : 0.0;

  double sum_sq = 0.0;
  for (size_t i = 1; i < n; ++i) sum_sq += (s * tp[i] - tg[i]).squaredNorm();
  return std::sqrt(sum_sq / static_cast<double>(n - 1));
}

AteStats ate_sequence(const Trajectory& pred, const Trajectory& gt, int snippet_length) {
  const size_t n = pred.poses.size();
  if (n != gt.poses.size()) throw std::invalid_argument("ate_sequence: length mismatch");
  if (snippet_length < 2 || static_cast<size_t>(snippet_length) > n)
    throw std::invalid_argument("ate_sequence: bad snippet length");

  AteStats stats;
  std::vector<double> errors;
  for (size_t start = 0; start + snippet_length <= n; ++start) {
    Trajectory wp, wg;
    wp.poses.assign(pred.poses.begin() + start, pred.poses.begin() + start + snippet_length);
    wg.poses.assign(gt.poses.begin() + start, gt.poses.begin() + start + snippet_length);
    errors.push_back(ate_snippet(wp, wg));
  }
  stats.snippets = static_cast<int64_t>(errors.size());
  double sum = 0.0;
  for (double e : errors) sum += e;
  stats.mean = sum / errors.size();
  double var = 0.0;
  for (double e : errors) var += (e - stats.mean) * (e - stats.mean);
  stats.stddev = std::sqrt(var / errors.size());
  return stats;
}

}  // namespace semdepth
