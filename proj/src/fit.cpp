#include "semdepth/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semdepth {

DepthMap FitState::depth(int frame) const {
  const Raster<double>& ld = log_depth.at(frame);
  DepthMap d(ld.height(), ld.width(), 1);
  for (int v = 0; v < ld.height(); ++v)
    for (int u = 0; u < ld.width(); ++u) d.at(v, u) = std::exp(ld.at(v, u));
  return d;
}

PoseSE3 FitState::pose_between(int from, int to) const {
  if (from == to) return PoseSE3{};
  if (from < to) {
    PoseSE3 t;  // identity
    for (int i = from; i < to; ++i) t = compose(exp6(pose_params.at(i)), t);
    return t;
  }
  return inverse(pose_between(to, from));
}

SnippetObjective::SnippetObjective(const FitFrames& frames, const LossOptions& opts)
    : frames_(&frames), opts_(opts) {
  if (frames.images.size() < 2)
    throw std::invalid_argument("fit: at least two frames required");
  if (frames.images.size() != frames.labels.size())
    throw std::invalid_argument("fit: image/label count mismatch");
}

std::vector<SnippetView> SnippetObjective::build_views(
    const std::vector<DepthMap>& depths, const std::vector<Vec6>& poses) const {
  const int n = frame_count();
  std::vector<SnippetView> views(n);
  for (int t = 0; t < n; ++t) {
    SnippetView& view = views[t];
    view.image = &frames_->images[t];
    view.labels = &frames_->labels[t];
    view.depth = &depths[t];
    view.k = frames_->k;
    if (t - 1 >= 0) {
      SnippetSource s = make_source(frames_->images[t - 1], frames_->labels[t - 1],
                                    depths[t - 1], poses[t - 1], false);
      view.sources.push_back(std::move(s));
    }
    if (t + 1 < n) {
      SnippetSource s = make_source(frames_->images[t + 1], frames_->labels[t + 1],
                                    depths[t + 1], poses[t], true);
      view.sources.push_back(std::move(s));
    }
  }
  return views;
}

std::vector<FrozenSelection> SnippetObjective::freeze(
    const std::vector<DepthMap>& depths, const std::vector<Vec6>& poses) const {
  const std::vector<SnippetView> views = build_views(depths, poses);
  std::vector<FrozenSelection> sel;
  sel.reserve(views.size());
  for (const SnippetView& v : views) sel.push_back(freeze_selection(v, opts_));
  return sel;
}

double SnippetObjective::frozen_value(const std::vector<DepthMap>& depths,
                                      const std::vector<Vec6>& poses,
                                      const std::vector<FrozenSelection>& sel) const {
  const std::vector<SnippetView> views = build_views(depths, poses);
  double total = 0.0;
  for (size_t t = 0; t < views.size(); ++t)
    total += frozen_loss(views[t], opts_, sel[t]).objective;
  return total;
}

void SnippetObjective::frozen_gradients(const std::vector<DepthMap>& depths,
                                        const std::vector<Vec6>& poses,
                                        const std::vector<FrozenSelection>& sel,
                                        std::vector<Raster<double>>* d_depth,
                                        std::vector<Vec6>* d_pose) const {
  const int n = frame_count();
  d_depth->assign(n, Raster<double>());
  for (int t = 0; t < n; ++t)
    (*d_depth)[t] = Raster<double>(depths[t].height(), depths[t].width(), 1, 0.0);
  d_pose->assign(n - 1, Vec6::Zero());

  const std::vector<SnippetView> views = build_views(depths, poses);
  for (int t = 0; t < n; ++t) {
    const SnippetGradient g = frozen_gradient(views[t], opts_, sel[t]);
    for (int v = 0; v < g.d_target_depth.height(); ++v)
      for (int u = 0; u < g.d_target_depth.width(); ++u)
        (*d_depth)[t].at(v, u) += g.d_target_depth.at(v, u);
    int src_idx = 0;
    if (t - 1 >= 0) {
      for (int v = 0; v < g.d_source_depth[src_idx].height(); ++v)
        for (int u = 0; u < g.d_source_depth[src_idx].width(); ++u)
          (*d_depth)[t - 1].at(v, u) += g.d_source_depth[src_idx].at(v, u);
      (*d_pose)[t - 1] += g.d_pose[src_idx];
      ++src_idx;
    }
    if (t + 1 < n) {
      for (int v = 0; v < g.d_source_depth[src_idx].height(); ++v)
        for (int u = 0; u < g.d_source_depth[src_idx].width(); ++u)
          (*d_depth)[t + 1].at(v, u) += g.d_source_depth[src_idx].at(v, u);
      (*d_pose)[t] += g.d_pose[src_idx];
    }
  }
}

namespace {

std::vector<DepthMap> materialize_depths(const std::vector<Raster<double>>& log_depth) {
  std::vector<DepthMap> out;
  out.reserve(log_depth.size());
  for (const auto& ld : log_depth) {
    DepthMap d(ld.height(), ld.width(), 1);
    for (int v = 0; v < ld.height(); ++v)
      for (int u = 0; u < ld.width(); ++u) d.at(v, u) = std::exp(ld.at(v, u));
    out.push_back(std::move(d));
  }
  return out;
}

// central differences on the frozen objective; verification oracle only
void finite_difference_gradients(const SnippetObjective& obj,
                                 const std::vector<Raster<double>>& log_depth,
                                 const std::vector<Vec6>& poses,
                                 const std::vector<FrozenSelection>& sel,
                                 std::vector<Raster<double>>* d_log_depth,
                                 std::vector<Vec6>* d_pose) {
  const double h_log = 1e-6, h_pose = 1e-7;
  std::vector<Raster<double>> ld = log_depth;
  d_log_depth->assign(ld.size(), Raster<double>());
  for (size_t f = 0; f < ld.size(); ++f) {
    (*d_log_depth)[f] = Raster<double>(ld[f].height(), ld[f].width(), 1, 0.0);
    for (int v = 0; v < ld[f].height(); ++v)
      for (int u = 0; u < ld[f].width(); ++u) {
        const double saved = ld[f].at(v, u);
        ld[f].at(v, u) = saved + h_log;
        const double up = obj.frozen_value(materialize_depths(ld), poses, sel);
        ld[f].at(v, u) = saved - h_log;
        const double dn = obj.frozen_value(materialize_depths(ld), poses, sel);
        ld[f].at(v, u) = saved;
        (*d_log_depth)[f].at(v, u) = (up - dn) / (2.0 * h_log);
      }
  }
  std::vector<Vec6> ps = poses;
  d_pose->assign(ps.size(), Vec6::Zero());
  const std::vector<DepthMap> depths = materialize_depths(ld);
  for (size_t k = 0; k < ps.size(); ++k)
    for (int i = 0; i < 6; ++i) {
      const double saved = ps[k][i];
      ps[k][i] = saved + h_pose;
      const double up = obj.frozen_value(depths, ps, sel);
      ps[k][i] = saved - h_pose;
      const double dn = obj.frozen_value(depths, ps, sel);
      ps[k][i] = saved;
      (*d_pose)[k][i] = (up - dn) / (2.0 * h_pose);
    }
}

}  // namespace

FitResult fit_snippet(const FitFrames& frames, const FitConfig& config,
                      const FitInit& init) {
  const int n = static_cast<int>(frames.images.size());
  SnippetObjective obj(frames, config.loss);

  FitState state;
  state.log_depth.resize(n);
  for (int f = 0; f < n; ++f) {
    const int h = frames.images[f].height(), w = frames.images[f].width();
    if (!init.depths.empty()) {
      const DepthMap& d0 = init.depths.at(f);
      if (d0.height() != h || d0.width() != w)
        throw std::invalid_argument("fit: init depth shape mismatch");
      state.log_depth[f] = Raster<double>(h, w, 1);
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
          if (!(d0.at(v, u) > 0.0))
            throw std::invalid_argument("fit: init depth must be positive");
          state.log_depth[f].at(v, u) = std::log(d0.at(v, u));
        }
    } else {
      state.log_depth[f] = Raster<double>(h, w, 1, std::log(config.init_depth));
    }
  }
  state.pose_params.assign(n - 1, Vec6::Zero());
  if (!init.poses.empty()) {
    if (static_cast<int>(init.poses.size()) != n - 1)
      throw std::invalid_argument("fit: init pose count mismatch");
    state.pose_params = init.poses;
  }

  double depth_step = config.depth_step;
  double pose_step = config.pose_step;

  std::vector<DepthMap> depths = materialize_depths(state.log_depth);
  std::vector<FrozenSelection> sel = obj.freeze(depths, state.pose_params);
  double current = obj.frozen_value(depths, state.pose_params, sel);
  state.objective_history.push_back(current);

  // best-so-far in fresh terms, in case the search has to halt
  std::vector<Raster<double>> best_log_depth = state.log_depth;
  std::vector<Vec6> best_pose = state.pose_params;
  double best_objective = current;

  auto fresh_log = [&](int iter) {
    FitIterationLog entry;
    entry.iteration = iter;
    entry.objective = current;
    entry.depth_step = depth_step;
    entry.pose_step = pose_step;
    const std::vector<SnippetView> views = obj.build_views(depths, state.pose_params);
    for (const SnippetView& view : views) {
      const LossReport r = total_loss(view, config.loss);
      entry.img += r.img;
      entry.ss += r.ss;
      entry.p3d += r.p3d;
      entry.road += r.road;
      entry.smooth += r.smooth;
      entry.total += r.total;
    }
    state.log.push_back(entry);
  };
  fresh_log(0);

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    state.iterations = iter;
    if (config.mask_refresh_period > 0 && iter % config.mask_refresh_period == 0) {
      sel = obj.freeze(depths, state.pose_params);
      current = obj.frozen_value(depths, state.pose_params, sel);
    }
    const double iter_start = current;

    std::vector<Raster<double>> d_depth;
    std::vector<Vec6> d_pose;
    if (config.gradient_mode == FitConfig::GradientMode::kAnalytic) {
      obj.frozen_gradients(depths, state.pose_params, sel, &d_depth, &d_pose);
      // chain to log-depth
      for (int f = 0; f < n; ++f)
        for (int v = 0; v < d_depth[f].height(); ++v)
          for (int u = 0; u < d_depth[f].width(); ++u)
            d_depth[f].at(v, u) *= depths[f].at(v, u);
    } else {
      finite_difference_gradients(obj, state.log_depth, state.pose_params, sel, &d_depth,
                                  &d_pose);
    }

    bool depth_accepted = false;
    if (config.optimize_depth) {
      double gnorm2 = 0.0;
      for (int f = 0; f < n; ++f)
        for (int v = 0; v < d_depth[f].height(); ++v)
          for (int u = 0; u < d_depth[f].width(); ++u)
            gnorm2 += d_depth[f].at(v, u) * d_depth[f].at(v, u);
      if (gnorm2 > 0.0) {
        double step = depth_step;
        for (int bt = 0; bt < config.max_backtracks; ++bt) {
          std::vector<Raster<double>> cand = state.log_depth;
          for (int f = 0; f < n; ++f)
            for (int v = 0; v < cand[f].height(); ++v)
              for (int u = 0; u < cand[f].width(); ++u)
                cand[f].at(v, u) -= step * d_depth[f].at(v, u);
          std::vector<DepthMap> cand_depths = materialize_depths(cand);
          const double value = obj.frozen_value(cand_depths, state.pose_params, sel);
          if (value < current) {
            state.log_depth = std::move(cand);
            depths = std::move(cand_depths);
            current = value;
            depth_step = std::min(step * 1.5, config.depth_step * 64.0);
            depth_accepted = true;
            break;
          }
          step *= 0.5;
        }
        if (!depth_accepted) depth_step = std::max(depth_step * 0.5, 1e-12);
      }
    }

    bool pose_accepted = false;
    if (config.optimize_pose && n >= 2) {
      double gnorm2 = 0.0;
      for (const Vec6& g : d_pose) gnorm2 += g.squaredNorm();
      if (gnorm2 > 0.0) {
        double step = pose_step;
        for (int bt = 0; bt < config.max_backtracks; ++bt) {
          std::vector<Vec6> cand = state.pose_params;
          for (size_t k = 0; k < cand.size(); ++k) cand[k] -= step * d_pose[k];
          const double value = obj.frozen_value(depths, cand, sel);
          if (value < current) {
            state.pose_params = std::move(cand);
            current = value;
            pose_step = std::min(step * 1.5, config.pose_step * 64.0);
            pose_accepted = true;
            break;
          }
          step *= 0.5;
        }
        if (!pose_accepted) pose_step = std::max(pose_step * 0.5, 1e-15);
      }
    }

    state.objective_history.push_back(current);
    fresh_log(iter);

    if (current < best_objective) {
      best_objective = current;
      best_log_depth = state.log_depth;
      best_pose = state.pose_params;
    }

    const bool any_block = (config.optimize_depth || config.optimize_pose);
    if (!depth_accepted && !pose_accepted && any_block) {
      // retry once against freshly frozen masks before giving up
      sel = obj.freeze(depths, state.pose_params);
      const double refreshed = obj.frozen_value(depths, state.pose_params, sel);
      if (refreshed >= current - std::abs(current) * 1e-15) {
        if (current <= best_objective + std::abs(best_objective) * 1e-15) {
          state.converged = true;
          state.message = "stationary: no descent direction found";
        } else {
          state.halted = true;
          state.message = "line search exhausted; returning best-so-far";
        }
        break;
      }
      current = refreshed;
      continue;
    }

    const double denom = std::max(std::abs(iter_start), 1e-300);
    if (iter_start - current >= 0.0 && (iter_start - current) / denom < config.tolerance) {
      state.converged = true;
      state.message = "relative decrease below tolerance";
      break;
    }
  }
  if (!state.converged && !state.halted) state.message = "iteration budget exhausted";

  if (state.halted) {
    state.log_depth = std::move(best_log_depth);
    state.pose_params = std::move(best_pose);
    depths = materialize_depths(state.log_depth);
  }

  FitResult result;
  result.state = std::move(state);
  const int target = (n - 1) / 2;
  const std::vector<SnippetView> views =
      obj.build_views(depths, result.state.pose_params);
  result.report = total_loss(views[target], config.loss);
  return result;
}

}  // namespace semdepth
