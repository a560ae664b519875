#pragma once

#include <optional>
#include <string>
#include <vector>

#include "semdepth/losses.hpp"

namespace semdepth {

// Direct per-pixel depth / pose recovery on a snippet by gradient descent
// on the total loss. Depth is parametrized as log-depth so positivity
// needs no constraint handling; poses are one param6 per adjacent pair.

struct FitConfig {
  LossOptions loss;
  int max_iterations = 200;
  double depth_step = 0.05;  // initial log-depth step
  double pose_step = 1e-3;
  double tolerance = 1e-7;  // relative objective decrease per iteration
  int mask_refresh_period = 10;
  int max_backtracks = 24;
  bool optimize_depth = true;
  bool optimize_pose = true;
  enum class GradientMode { kAnalytic, kFiniteDifference };
  GradientMode gradient_mode = GradientMode::kAnalytic;
  double init_depth = 10.0;  // uniform init unless rasters are given
};

struct FitFrames {
  std::vector<Image> images;
  std::vector<LabelMap> labels;
  Intrinsics k;
};

struct FitInit {
  std::vector<DepthMap> depths;  // empty: constant FitConfig::init_depth
  std::vector<Vec6> poses;       // empty: zero motion; one per adjacent pair
};

struct FitIterationLog {
  int iteration = 0;
  double objective = 0.0;  // frozen surrogate after the iteration
  double img = 0.0, ss = 0.0, p3d = 0.0, road = 0.0, smooth = 0.0, total = 0.0;
  double depth_step = 0.0, pose_step = 0.0;
};

struct FitState {
  std::vector<Raster<double>> log_depth;  // per frame
  std::vector<Vec6> pose_params;          // frame i -> i+1
  int iterations = 0;
  bool converged = false;
  bool halted = false;  // line search exhausted before convergence
  std::string message;
  std::vector<double> objective_history;  // frozen surrogate, per accepted step
  std::vector<FitIterationLog> log;

  DepthMap depth(int frame) const;
  PoseSE3 pose_between(int from, int to) const;  // composed along the chain
};

struct FitResult {
  FitState state;
  LossReport report;  // fresh report for the middle target frame
};

FitResult fit_snippet(const FitFrames& frames, const FitConfig& config,
                      const FitInit& init = {});

// Objective and gradient of the snippet as the fitter sees them: the sum
// over every frame as target with its adjacent frames as sources, under
// the given frozen selections. Exposed for verification.
struct SnippetObjective {
  SnippetObjective(const FitFrames& frames, const LossOptions& opts);

  int frame_count() const { return static_cast<int>(frames_->images.size()); }

  // Views must be rebuilt whenever variables change.
  std::vector<SnippetView> build_views(const std::vector<DepthMap>& depths,
                                       const std::vector<Vec6>& poses) const;

  std::vector<FrozenSelection> freeze(const std::vector<DepthMap>& depths,
                                      const std::vector<Vec6>& poses) const;

  double frozen_value(const std::vector<DepthMap>& depths, const std::vector<Vec6>& poses,
                      const std::vector<FrozenSelection>& sel) const;

  // Analytic gradients w.r.t. depth rasters (not log-depth) and pose params.
  void frozen_gradients(const std::vector<DepthMap>& depths, const std::vector<Vec6>& poses,
                        const std::vector<FrozenSelection>& sel,
                        std::vector<Raster<double>>* d_depth,
                        std::vector<Vec6>* d_pose) const;

  const LossOptions& options() const { return opts_; }

 private:
  const FitFrames* frames_;
  LossOptions opts_;
};

}  // namespace semdepth
