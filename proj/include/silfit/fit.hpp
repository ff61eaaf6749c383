#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "silfit/loss.hpp"
#include "silfit/metrics.hpp"

namespace silfit {

// Uniform double in [0,1) from the raw engine output; avoids the
// implementation-defined std::uniform_real_distribution so streams are
// reproducible across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

enum class AblationMode { full, m1_only, l2_only, raw_l1_plus_l2, no_w, no_mu };

inline const char* to_string(AblationMode m) {
  switch (m) {
    case AblationMode::full: return "full";
    case AblationMode::m1_only: return "m1_only";
    case AblationMode::l2_only: return "l2_only";
    case AblationMode::raw_l1_plus_l2: return "raw_l1_plus_l2";
    case AblationMode::no_w: return "no_w";
    case AblationMode::no_mu: return "no_mu";
  }
  return "full";
}

inline AblationMode ablation_mode_from(const std::string& s) {
  if (s == "full") return AblationMode::full;
  if (s == "m1_only") return AblationMode::m1_only;
  if (s == "l2_only") return AblationMode::l2_only;
  if (s == "raw_l1_plus_l2") return AblationMode::raw_l1_plus_l2;
  if (s == "no_w") return AblationMode::no_w;
  if (s == "no_mu") return AblationMode::no_mu;
  throw BadParams("unknown ablation mode: " + s);
}

struct FitConfig {
  int n_points = 1000;
  int iterations = 2000;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  double init_half_extent = 0.5;
  int pad = 32;
  LossParams loss;
  AblationMode ablation_mode = AblationMode::full;
  int views_used = 0;  // 0 = all
  bool determinism = true;
};

struct AdamState {
  std::vector<double> m, v;  // per coordinate
  long long step = 0;
};

struct FitReport {
  std::vector<double> loss_trace;      // length = iterations
  std::vector<double> coverage_trace;  // foreground-coverage per iteration
  PointCloud final_cloud;
  double wall_time_sec = 0;
  std::string config_echo;  // verbatim config file contents when available
};

inline PointCloud init_cloud(int n, double half_extent, std::uint64_t seed) {
  if (n < 1) throw BadParams("init_cloud: n < 1");
  std::mt19937_64 rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    double x = (2 * uniform01(rng) - 1) * half_extent;
    double y = (2 * uniform01(rng) - 1) * half_extent;
    double z = (2 * uniform01(rng) - 1) * half_extent;
    cloud.points.push_back({x, y, z});
  }
  return cloud;
}

// Canonical Adam with bias-corrected moments.
inline void adam_step(AdamState& state, std::vector<double>& coords,
                      const std::vector<double>& grads, double lr, double beta1,
                      double beta2, double eps) {
  if (coords.size() != grads.size()) throw ShapeMismatch("adam_step: size mismatch");
  if (state.m.empty()) {
    state.m.assign(coords.size(), 0.0);
    state.v.assign(coords.size(), 0.0);
  }
  if (state.m.size() != coords.size()) throw ShapeMismatch("adam_step: stale state");
  ++state.step;
  double bc1 = 1.0 - std::pow(beta1, double(state.step));
  double bc2 = 1.0 - std::pow(beta2, double(state.step));
  for (std::size_t i = 0; i < coords.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1 - beta2) * grads[i] * grads[i];
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    coords[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

inline LossOptions options_for(AblationMode mode) {
  LossOptions o;
  switch (mode) {
    case AblationMode::raw_l1_plus_l2: o.use_smoothed = false; break;
    case AblationMode::no_w: o.override_w = true; break;
    case AblationMode::no_mu: o.override_mu = true; break;
    default: break;
  }
  return o;
}

inline LossParams params_for(AblationMode mode, const LossParams& base) {
  LossParams p = base;
  if (mode == AblationMode::m1_only) p.beta = 0;
  if (mode == AblationMode::l2_only) p.alpha = 0;
  return p;
}

// Fraction of points whose binary foreground sample is >= 0.5, averaged over
// views; behind-camera points count as uncovered.
inline double coverage(const PointCloud& cloud, const std::vector<ViewData>& views) {
  if (views.empty() || cloud.size() == 0) return 0;
  double total = 0;
  for (const ViewData& view : views) {
    ProjectedCloud pc = project_cloud(view.pose, cloud);
    int inside = 0;
    for (std::size_t j = 0; j < cloud.size(); ++j)
      if (pc.valid[j] && bilinear_sample(view.binary, pc.proj[j].uv) >= 0.5) ++inside;
    total += double(inside) / double(cloud.size());
  }
  return total / double(views.size());
}

inline FitReport fit(const FitConfig& config, const std::vector<ViewData>& views) {
  if (views.empty()) throw BadParams("fit: no views");
  int used = config.views_used > 0 ? std::min<int>(config.views_used, int(views.size()))
                                   : int(views.size());
  std::vector<ViewData> active(views.begin(), views.begin() + used);

  auto t0 = std::chrono::steady_clock::now();
  PointCloud cloud = init_cloud(config.n_points, config.init_half_extent, config.seed);
  LossParams params = params_for(config.ablation_mode, config.loss);
  LossOptions opts = options_for(config.ablation_mode);

  AdamState state;
  std::vector<double> coords(cloud.size() * 3), grads(cloud.size() * 3);
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    coords[3 * j] = cloud.points[j].x;
    coords[3 * j + 1] = cloud.points[j].y;
    coords[3 * j + 2] = cloud.points[j].z;
  }

  FitReport report;
  report.loss_trace.reserve(config.iterations);
  report.coverage_trace.reserve(config.iterations);

  for (int it = 0; it < config.iterations; ++it) {
    EvalResult res = evaluate_loss(cloud, active, params, opts, true);
    if (!std::isfinite(res.loss)) throw NumericFailure("loss is not finite");
    report.loss_trace.push_back(res.loss);
    report.coverage_trace.push_back(coverage(cloud, active));

    for (std::size_t j = 0; j < cloud.size(); ++j) {
      grads[3 * j] = res.grad[j].x;
      grads[3 * j + 1] = res.grad[j].y;
      grads[3 * j + 2] = res.grad[j].z;
    }
    adam_step(state, coords, grads, config.learning_rate, config.beta1, config.beta2,
              config.adam_eps);
    for (std::size_t j = 0; j < cloud.size(); ++j)
      cloud.points[j] = {coords[3 * j], coords[3 * j + 1], coords[3 * j + 2]};
  }

  report.final_cloud = cloud;
  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

struct AblationRow {
  std::string label;   // mode name or "views_k"
  std::uint64_t seed;
  double chamfer;      // normalized clouds, x100 table convention
};

inline double fit_chamfer(const FitConfig& cfg, const std::vector<ViewData>& views,
                          const PointCloud& gt) {
  FitReport rep = fit(cfg, views);
  return chamfer_distance(normalize_cloud(rep.final_cloud), normalize_cloud(gt), true);
}

// Runs every ablation mode plus reduced view counts; one row per (label, seed).
inline std::vector<AblationRow> run_ablation(const FitConfig& base,
                                             const std::vector<ViewData>& views,
                                             const PointCloud& gt_cloud,
                                             const std::vector<std::uint64_t>& seeds = {0}) {
  std::vector<AblationRow> rows;
  const AblationMode modes[] = {AblationMode::full,       AblationMode::m1_only,
                                AblationMode::l2_only,    AblationMode::raw_l1_plus_l2,
                                AblationMode::no_w,       AblationMode::no_mu};
  for (std::uint64_t seed : seeds) {
    for (AblationMode mode : modes) {
      FitConfig cfg = base;
      cfg.seed = seed;
      cfg.ablation_mode = mode;
      rows.push_back({to_string(mode), seed, fit_chamfer(cfg, views, gt_cloud)});
    }
    for (int g = 2; g <= 4 && g <= int(views.size()); ++g) {
      FitConfig cfg = base;
      cfg.seed = seed;
      cfg.ablation_mode = AblationMode::full;
      cfg.views_used = g;
      rows.push_back({"views_" + std::to_string(g), seed, fit_chamfer(cfg, views, gt_cloud)});
    }
  }
  return rows;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace silfit
