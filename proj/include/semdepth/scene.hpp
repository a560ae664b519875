#pragma once

#include <cstdint>
#include <vector>

#include "semdepth/camera.hpp"
#include "semdepth/raster.hpp"

namespace semdepth {

// Parametric test scenes rendered by analytic ray casting, so depth,
// occlusion and correspondence ground truth are exact. Textures are
// band-limited sinusoid sums evaluated at the 3D hit point: appearance is
// view-independent and bilinear resampling error stays provably small.

struct TextureSpec {
  double amplitude = 0.4;        // total swing around 0.5, keep <= 0.45
  int octaves = 4;
  double min_wavelength = 2.0;   // meters
  double max_wavelength = 12.0;
};

struct Primitive {
  enum class Kind { kPlaneZ, kGround, kBox };
  Kind kind = Kind::kPlaneZ;
  uint8_t class_id = 2;
  double plane_depth = 20.0;      // kPlaneZ: world plane z = plane_depth
  double ground_height = 1.5;     // kGround: world plane y = ground_height (y down)
  Vec3 box_min = Vec3::Zero();    // kBox, at frame 0
  Vec3 box_max = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();   // world translation per frame step
  TextureSpec texture;
};

struct SceneSpec {
  int height = 64;
  int width = 128;
  Intrinsics k{100.0, 100.0, 63.5, 31.5};
  int frame_count = 2;
  std::vector<PoseSE3> camera_to_world;  // one per frame
  std::vector<Primitive> primitives;
  uint64_t seed = 1;
  double min_depth = 0.1;
  double depth_cap = 80.0;
};

struct RenderedFrame {
  Image image;
  DepthMap depth;
  LabelMap labels;
  Mask valid;  // always full for an accepted spec
  PoseSE3 camera_to_world;
};

// Throws std::invalid_argument when a ray misses every primitive or the
// hit leaves (min_depth, depth_cap).
RenderedFrame render(const SceneSpec& spec, int frame);

// Ray-primitive hit, exposed for the correspondence oracle.
struct Hit {
  bool found = false;
  double distance = 0.0;      // camera-frame depth along the pixel ray
  int primitive = -1;
  Vec3 point = Vec3::Zero();  // world coordinates
};
Hit cast_ray(const SceneSpec& spec, int frame, const Vec3& origin_world,
             const Vec3& dir_world);

// Where the world point seen at `p` in frame i lands in frame j under the
// static-scene assumption, and whether frame j actually shows the same
// surface there. This is the oracle for the semantic-consistency mask.
struct Correspondence {
  Pixel pixel;
  bool in_image = false;
  bool occluded = false;    // something nearer covers the point in frame j
  bool consistent = false;  // class seen at the reprojection matches frame i
};
Correspondence ground_truth_correspondence(const SceneSpec& spec, int frame_i,
                                           int frame_j, const Pixel& p);

// Per-frame texture color of a primitive at a world-space point.
void primitive_color(const SceneSpec& spec, int primitive, int frame, const Vec3& point,
                     double* rgb);

}  // namespace semdepth
