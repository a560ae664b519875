#include "semdepth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace semdepth {

namespace {

struct Wave {
  Vec3 direction;
  double freq;      // 2*pi / wavelength
  double phase[3];  // per channel
  double amplitude;
};

// Texture parameters are a pure function of (seed, primitive index).
std::vector<Wave> texture_waves(const SceneSpec& spec, int primitive) {
  const TextureSpec& tex = spec.primitives[primitive].texture;
  std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ULL + primitive + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Wave> waves(tex.octaves);
  for (int i = 0; i < tex.octaves; ++i) {
    Wave& wv = waves[i];
    // random direction, rejection-free via spherical coordinates
    const double z = 2.0 * unit(rng) - 1.0;
    const double az = 2.0 * M_PI * unit(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    wv.direction = Vec3(r * std::cos(az), r * std::sin(az), z);
    const double t = tex.octaves == 1 ? 0.0 : static_cast<double>(i) / (tex.octaves - 1);
    const double wavelength = tex.max_wavelength *
                              std::pow(tex.min_wavelength / tex.max_wavelength, t) *
                              (0.8 + 0.4 * unit(rng));
    wv.freq = 2.0 * M_PI / wavelength;
    for (int c = 0; c < 3; ++c) wv.phase[c] = 2.0 * M_PI * unit(rng);
    wv.amplitude = tex.amplitude / tex.octaves;
  }
  return waves;
}

Vec3 primitive_offset(const Primitive& prim, int frame) {
  return prim.velocity * static_cast<double>(frame);
}

// nearest positive ray parameter for one primitive, or infinity
double intersect(const Primitive& prim, int frame, const Vec3& o, const Vec3& d) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const Vec3 off = primitive_offset(prim, frame);
  switch (prim.kind) {
    case Primitive::Kind::kPlaneZ: {
      const double z0 = prim.plane_depth + off.z();
      if (d.z() == 0.0) return kInf;
      const double s = (z0 - o.z()) / d.z();
      return s > 0.0 ? s : kInf;
    }
    case Primitive::Kind::kGround: {
      const double y0 = prim.ground_height + off.y();
      if (d.y() == 0.0) return kInf;
      const double s = (y0 - o.y()) / d.y();
      return s > 0.0 ? s : kInf;
    }
    case Primitive::Kind::kBox: {
      const Vec3 lo = prim.box_min + off, hi = prim.box_max + off;
      double t_enter = -kInf, t_exit = kInf;
      for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
          if (o[a] < lo[a] || o[a] > hi[a]) return kInf;
          continue;
        }
        double t0 = (lo[a] - o[a]) / d[a];
        double t1 = (hi[a] - o[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
      }
      if (t_enter > t_exit) return kInf;
      if (t_enter > 0.0) return t_enter;
      return t_exit > 0.0 ? t_exit : kInf;  // origin inside the box
    }
  }
  return kInf;
}

}  // namespace

void primitive_color(const SceneSpec& spec, int primitive, int frame, const Vec3& point,
                     double* rgb) {
  const std::vector<Wave> waves = texture_waves(spec, primitive);
  const Vec3 local = point - primitive_offset(spec.primitives[primitive], frame);
  for (int c = 0; c < 3; ++c) rgb[c] = 0.5;
  for (const Wave& wv : waves) {
    const double arg = wv.freq * wv.direction.dot(local);
    for (int c = 0; c < 3; ++c) rgb[c] += wv.amplitude * std::sin(arg + wv.phase[c]);
  }
  for (int c = 0; c < 3; ++c) rgb[c] = std::clamp(rgb[c], 0.0, 1.0);
}

Hit cast_ray(const SceneSpec& spec, int frame, const Vec3& origin_world,
             const Vec3& dir_world) {
  Hit hit;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < spec.primitives.size(); ++i) {
    const double s = intersect(spec.primitives[i], frame, origin_world, dir_world);
    if (s < best) {
      best = s;
      hit.primitive = static_cast<int>(i);
    }
  }
  if (hit.primitive >= 0) {
    hit.found = true;
    hit.distance = best;
    hit.point = origin_world + best * dir_world;
  }
  return hit;
}

RenderedFrame render(const SceneSpec& spec, int frame) {
  if (frame < 0 || frame >= spec.frame_count)
    throw std::invalid_argument("render: frame index out of range");
  if (static_cast<int>(spec.camera_to_world.size()) != spec.frame_count)
    throw std::invalid_argument("render: camera pose per frame required");
  if (spec.primitives.empty())
    throw std::invalid_argument("render: scene has no primitives");

  const PoseSE3& cam = spec.camera_to_world[frame];
  RenderedFrame out;
  out.camera_to_world = cam;
  out.image = Image(spec.height, spec.width, 3);
  out.depth = DepthMap(spec.height, spec.width, 1);
  out.labels = LabelMap(spec.height, spec.width, 1);
  out.valid = Mask(spec.height, spec.width, 1, 1);

  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) {
      const Vec3 ray_cam = pixel_ray(spec.k, Pixel{static_cast<double>(u),
                                                   static_cast<double>(v)});
      const Vec3 dir_world = cam.rotation * ray_cam;
      const Hit hit = cast_ray(spec, frame, cam.translation, dir_world);
      // ray_cam.z == 1, so the ray parameter equals camera-frame depth
      if (!hit.found)
        throw std::invalid_argument("render: ray misses the scene; add a background");
      if (hit.distance <= spec.min_depth || hit.distance >= spec.depth_cap)
        throw std::invalid_argument("render: hit outside the configured depth range");
      out.depth.at(v, u) = hit.distance;
      out.labels.at(v, u) = spec.primitives[hit.primitive].class_id;
      double rgb[3];
      primitive_color(spec, hit.primitive, frame, hit.point, rgb);
      for (int c = 0; c < 3; ++c) out.image.at(v, u, c) = rgb[c];
    }
  return out;
}

Correspondence ground_truth_correspondence(const SceneSpec& spec, int frame_i,
                                           int frame_j, const Pixel& p) {
  Correspondence out;
  const PoseSE3& cam_i = spec.camera_to_world.at(frame_i);
  const PoseSE3& cam_j = spec.camera_to_world.at(frame_j);

  const Vec3 dir_i = cam_i.rotation * pixel_ray(spec.k, p);
  const Hit hit_i = cast_ray(spec, frame_i, cam_i.translation, dir_i);
  if (!hit_i.found) return out;

  // static-scene assumption: the world point stays where frame i saw it
  const Vec3 in_cam_j = inverse(cam_j).apply(hit_i.point);
  const Projection proj = project(spec.k, in_cam_j);
  if (!proj.in_front) return out;
  out.pixel = proj.pixel;
  out.in_image = proj.pixel.u >= 0.0 && proj.pixel.u <= spec.width - 1.0 &&
                 proj.pixel.v >= 0.0 && proj.pixel.v <= spec.height - 1.0;
  if (!out.in_image) return out;

  const Vec3 dir_j = hit_i.point - cam_j.translation;
  const Hit hit_j = cast_ray(spec, frame_j, cam_j.translation, dir_j / in_cam_j.z());
  if (!hit_j.found) return out;  // should not happen for covered scenes
  // ray is scaled so the parameter at hit_i.point equals in_cam_j.z
  out.occluded = hit_j.distance < in_cam_j.z() - 1e-6;
  out.consistent = spec.primitives[hit_j.primitive].class_id ==
                   spec.primitives[hit_i.primitive].class_id;
  return out;
}

}  // namespace semdepth
