#pragma once

#include <vector>

#include "semdepth/camera.hpp"
#include "semdepth/raster.hpp"

namespace semdepth {

// KITTI-style depth metrics over valid ground-truth pixels.
struct DepthEvalResult {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0, delta2 = 0.0, delta3 = 0.0;
  int64_t n_pixels = 0;
};

// Ground truth is sparse: pixels with mask == 0 are skipped. The floor
// guards the log and the divisions; the paper states only the cap.
inline constexpr double kGtDepthFloor = 1e-3;

// median(gt) / median(pred) over the valid pixels. Throws if none.
double median_scale(const DepthMap& pred, const DepthMap& gt, const Mask& valid);

DepthEvalResult depth_metrics(const DepthMap& pred, const DepthMap& gt, const Mask& valid,
                              double cap = 80.0, bool apply_median_scaling = false);

// Ordered camera-to-world poses.
struct Trajectory {
  std::vector<PoseSE3> poses;
};

// Absolute trajectory error of one snippet: both trajectories are
// re-anchored at frame 0, the predicted translations get the
// least-squares scale, and the RMSE over the non-anchor frames is
// returned. Throws on length mismatch or fewer than two poses.
double ate_snippet(const Trajectory& pred, const Trajectory& gt);

struct AteStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  int64_t snippets = 0;
};
// Sliding window of snippet_length, stride 1, over a full sequence.
AteStats ate_sequence(const Trajectory& pred, const Trajectory& gt, int snippet_length);

}  // namespace semdepth
