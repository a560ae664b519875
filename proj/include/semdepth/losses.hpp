#pragma once

#include <cstdint>
#include <vector>

#include "semdepth/camera.hpp"
#include "semdepth/raster.hpp"
#include "semdepth/warp.hpp"

namespace semdepth {

// Weights of the total loss plus the constants of its terms. The mask
// penalties must dominate every attainable per-pixel error: with
// intensities in [0,1] the reconstruction error is bounded by 1, and the
// 3D point error by the L1 diameter of the visible volume.
struct LossWeights {
  double lambda_img = 1.0;
  double lambda_ss = 0.1;
  double lambda_p3d = 0.1;
  double lambda_road = 0.1;
  double lambda_smooth = 0.001;
  double alpha = 0.85;             // SSIM share of the reconstruction error
  double photo_mask_penalty = 10.0;   // b
  double point_mask_penalty = 320.0;  // h, also the keep threshold
};

struct LossOptions {
  LossWeights weights;
  bool use_semantic_mask = true;  // off: M == 0 everywhere (plain minimum reprojection)
  bool enable_img = true;
  bool enable_ss = true;
  bool enable_p3d = true;
  bool enable_road = true;
  bool enable_smooth = true;
  std::vector<uint8_t> road_classes = {0, 1};  // road, sidewalk
};

// One target frame with its source frames. Non-owning. pose_param is the
// 6-vector the pose actually optimized over; param_forward says whether
// exp6(pose_param) is target_to_source or its inverse.
struct SnippetSource {
  const Image* image = nullptr;
  const LabelMap* labels = nullptr;
  const DepthMap* depth = nullptr;
  PoseSE3 target_to_source;
  Vec6 pose_param = Vec6::Zero();
  bool param_forward = true;
};

struct SnippetView {
  const Image* image = nullptr;
  const LabelMap* labels = nullptr;
  const DepthMap* depth = nullptr;
  Intrinsics k;
  std::vector<SnippetSource> sources;
};

SnippetSource make_source(const Image& img, const LabelMap& lab, const DepthMap& dep,
                          const Vec6& pose_param, bool param_forward);

// ---- individual loss terms ----

// 3x3 uniform window, reflect padding, per channel then channel-averaged.
Raster<double> box3_reflect(const Raster<double>& x);
Raster<double> box3_reflect_adjoint(const Raster<double>& x);

struct SsimStats {  // window statistics, kept for the backward pass
  Raster<double> mu_a, mu_b, var_a, var_b, cov;  // one channel per image channel
  Raster<double> ssim;                           // channel-averaged map
};
SsimStats ssim_stats(const Image& a, const Image& b);
Raster<double> ssim(const Image& a, const Image& b);

// re = alpha/2 (1 - SSIM) + (1 - alpha) |a - b|, L1 channel-averaged.
Raster<double> recon_error(const Image& target, const Image& reconstruction,
                           double alpha = 0.85);
// Mean of re; optionally restricted to a validity mask.
double recon_loss(const Image& target, const Image& reconstruction,
                  double alpha = 0.85, const Mask* valid = nullptr);

// mu = [min_s re(I_t, warped_s) < min_s re(I_t, source_s)], strict.
// Pixels with no valid warped source get 0.
Mask automask(const Image& target, const std::vector<Raster<double>>& warped_re,
              const std::vector<Raster<double>>& identity_re,
              const std::vector<Mask>& warp_valid);

struct MaskedImageLoss {
  double value = 0.0;
  int64_t count = 0;  // surviving pixels (the mean's denominator)
  Raster<double> min_mre;
  Mask gate;
  IndexMap source;  // argmin source per surviving pixel, -1 elsewhere
};
// Masked minimum-reprojection loss: mre_s = re_s + b M_s, keep
// min_s mre_s where it beats the unwarped-source error.
MaskedImageLoss masked_image_loss(const std::vector<Raster<double>>& warped_re,
                                  const std::vector<Raster<double>>& identity_re,
                                  const std::vector<Mask>& warp_valid,
                                  const std::vector<Mask>& sem_masks,
                                  double photo_mask_penalty);

// Plain minimum reprojection under the automask; implemented as its own
// loop so the masked loss can be checked to reduce to it.
double min_reprojection_loss(const std::vector<Raster<double>>& warped_re,
                             const std::vector<Raster<double>>& identity_re,
                             const std::vector<Mask>& warp_valid, int64_t* count = nullptr);

// Forward differences, image gradient channel-averaged, mean over H*W.
double smoothness_loss(const DepthMap& depth, const Image& image);

// Mean over pixels with a valid source of min_s [S_t != warped_s].
double semantic_loss(const LabelMap& target, const std::vector<LabelMap>& warped,
                     const std::vector<Mask>& warp_valid, int64_t* count = nullptr);

// M = [S_t != S_hat]; ignore labels never count as a mismatch.
Mask semantic_mask(const LabelMap& target, const LabelMap& warped);

struct RoadOrderingLoss {
  double value = 0.0;       // violations / (H*W)
  int64_t violations = 0;   // pairs where the lower pixel is deeper
  double hinge = 0.0;       // max(0, D(u,v) - D(u,v-1)) surrogate, same normalization
};
// Penalizes road/sidewalk pixels whose depth exceeds the pixel above.
RoadOrderingLoss road_ordering_loss(const DepthMap& depth, const LabelMap& labels,
                                    const std::vector<uint8_t>& road_classes);

double point_error(const Vec3& a, const Vec3& b);  // L1 distance

struct PointLoss3D {
  double value = 0.0;
  int64_t count = 0;
  std::vector<Raster<double>> pe;  // per source, 0 where undefined
  Mask gate;
  IndexMap source;
};
PointLoss3D point_loss_3d(const SnippetView& view, const std::vector<Mask>& sem_masks,
                          double point_mask_penalty);

// ---- total loss ----

struct LossReport {
  double img = 0.0, ss = 0.0, p3d = 0.0, road = 0.0, smooth = 0.0;
  double total = 0.0;
  int64_t road_violations = 0;
  int64_t img_count = 0, ss_count = 0, p3d_count = 0;
  std::vector<Raster<double>> re;   // per source
  std::vector<Raster<double>> mre;  // re + b M
  std::vector<Raster<double>> pe;
  Mask mu;
  std::vector<Mask> sem_mask;
  std::vector<Mask> warp_valid;
  IndexMap img_source;
  Mask img_gate;
  IndexMap p3d_source;
  Mask p3d_gate;
};

LossReport total_loss(const SnippetView& view, const LossOptions& opts);

// ---- frozen evaluation (optimization path) ----
//
// Masks, gates and argmin selections are data-dependent but carry no
// gradient; the descent loop freezes them and refreshes periodically.
// Under a frozen selection the loss stays defined while geometry moves:
// frozen-valid pixels sample with coordinates clamped to the box,
// frozen-invalid pixels keep their fill value.

struct FrozenSelection {
  std::vector<Mask> warp_valid;
  std::vector<Mask> sem_mask;
  Mask img_gate;
  IndexMap img_source;
  int64_t img_count = 0;
  Mask p3d_gate;
  IndexMap p3d_source;
  int64_t p3d_count = 0;
  double ss_value = 0.0;  // constant while frozen
};

FrozenSelection freeze_selection(const SnippetView& view, const LossOptions& opts);

// Differentiable objective under a frozen selection: the road term uses
// the hinge surrogate, the semantic term its frozen value.
struct FrozenLoss {
  double objective = 0.0;
  double img = 0.0, p3d = 0.0, road_hinge = 0.0, smooth = 0.0;
};
FrozenLoss frozen_loss(const SnippetView& view, const LossOptions& opts,
                       const FrozenSelection& sel);

// Analytic gradient of the frozen objective.
struct SnippetGradient {
  Raster<double> d_target_depth;
  std::vector<Raster<double>> d_source_depth;
  std::vector<Vec6> d_pose;  // w.r.t. each source's pose_param
};
SnippetGradient frozen_gradient(const SnippetView& view, const LossOptions& opts,
                                const FrozenSelection& sel);

}  // namespace semdepth
