#pragma once

#include <cmath>
#include <vector>

#include "silfit/camera.hpp"
#include "silfit/silhouette.hpp"

namespace silfit {

struct LossParams {
  double alpha = 1.0;
  double beta = 1.0;
  double theta = 0.05;                       // decay, normalized-distance units
  std::vector<double> mu_scales = {1, 2, 3}; // square half-widths, pixels
  double mu_min = 1e-3;
  bool normalize_inner_sum = true;
};

// One view's supervision: silhouette, its smoothed field, and a real-valued
// copy of the binary mask for weight/bias sampling.
struct ViewData {
  CameraPose pose;
  BinarySilhouette sil;
  SmoothedField field;
  Grid binary;
};

inline ViewData make_view(const CameraPose& pose, const BinarySilhouette& sil, int pad = 32) {
  return {pose, sil, build_smoothed_field(sil, pad), to_grid(sil)};
}

struct PerViewEval {
  int view = 0;
  std::vector<double> pi_g;  // sampled first-term values
  std::vector<double> w;
  std::vector<double> mu;
  std::vector<double> m1;
  std::vector<double> l2;
  double loss = 0;  // sum over points of alpha*m1 + beta*l2
};

// Term masking used by the ablation harness and by tests that need the
// stop-gradient quantities frozen.
struct LossOptions {
  bool use_smoothed = true;   // false: first term samples the raw binary mask (Eq.-1 baseline)
  bool override_w = false;    // all w := 1
  bool override_mu = false;   // all mu := mu_min
  // When non-null, per-view w and mu are taken from here instead of being
  // recomputed (index [view][point]).
  const std::vector<std::vector<double>>* frozen_w = nullptr;
  const std::vector<std::vector<double>>* frozen_mu = nullptr;
};

// Mean over all N points of |1 - pi| on the raw binary mask.
inline double raw_l1_loss(const BinarySilhouette& sil, const ProjectedCloud& pc) {
  Grid g = to_grid(sil);
  double sum = 0;
  for (std::size_t j = 0; j < pc.proj.size(); ++j)
    if (pc.valid[j]) sum += std::abs(1.0 - bilinear_sample(g, pc.proj[j].uv));
  return pc.proj.empty() ? 0.0 : sum / double(pc.proj.size());
}

inline double m1_point(const SmoothedField& field, const Vec2& uv) {
  return 1.0 - bilinear_sample(field.values, field.to_padded(uv));
}

inline std::vector<double> indicator_weights(const Grid& binary, const ProjectedCloud& pc) {
  std::vector<double> w(pc.proj.size(), 0.0);
  for (std::size_t j = 0; j < pc.proj.size(); ++j)
    if (pc.valid[j]) w[j] = bilinear_sample(binary, pc.proj[j].uv);
  return w;
}

// Multi-scale boundary bias: for each scale, sample the binary mask at the 4
// corners of the centered axis-aligned square; mu is the mean of all samples,
// clamped to [mu_min, 1].
inline double boundary_bias_point(const Grid& binary, const Vec2& uv,
                                  const std::vector<double>& scales, double mu_min) {
  double sum = 0;
  for (double s : scales) {
    sum += bilinear_sample(binary, {uv.x - s, uv.y - s});
    sum += bilinear_sample(binary, {uv.x + s, uv.y - s});
    sum += bilinear_sample(binary, {uv.x - s, uv.y + s});
    sum += bilinear_sample(binary, {uv.x + s, uv.y + s});
  }
  double mu = sum / (4.0 * scales.size());
  return std::min(1.0, std::max(mu_min, mu));
}

inline std::vector<double> boundary_bias(const Grid& binary, const ProjectedCloud& pc,
                                         const std::vector<double>& scales, double mu_min) {
  std::vector<double> mu(pc.proj.size(), mu_min);
  for (std::size_t j = 0; j < pc.proj.size(); ++j)
    if (pc.valid[j]) mu[j] = boundary_bias_point(binary, pc.proj[j].uv, scales, mu_min);
  return mu;
}

// Pairwise projection distances normalized by the padded-image diagonal.
inline std::vector<std::vector<double>> pairwise_distance(const ProjectedCloud& pc, double diag) {
  std::size_t n = pc.proj.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      double v = (pc.proj[a].uv - pc.proj[b].uv).norm() / diag;
      d[a][b] = v;
      d[b][a] = v;
    }
  return d;
}

struct EvalResult {
  double loss = 0;
  std::vector<Vec3> grad;         // empty unless requested
  std::vector<PerViewEval> views;
};

// E_L = sum_i sum_j (alpha*M1 + beta*L2) / (G*N), with the analytic gradient
// under the stop-gradient convention (w, mu constant within a step).
inline EvalResult evaluate_loss(const PointCloud& cloud,
                                const std::vector<ViewData>& views,
                                const LossParams& params,
                                const LossOptions& opts = {},
                                bool want_grad = false) {
  const std::size_t n = cloud.size();
  const std::size_t g_t = views.size();
  EvalResult res;
  res.views.resize(g_t);
  if (want_grad) res.grad.assign(n, Vec3{});
  if (n == 0 || g_t == 0) return res;

  const double scale = 1.0 / (double(g_t) * double(n));
  const double inner_norm =
      (params.normalize_inner_sum && n > 1) ? 1.0 / double(n - 1) : 1.0;

  for (std::size_t vi = 0; vi < g_t; ++vi) {
    const ViewData& view = views[vi];
    if (view.field.width != view.sil.width + 2 * view.field.pad ||
        view.field.height != view.sil.height + 2 * view.field.pad)
      throw InconsistentView("field dimensions do not match silhouette + padding");

    ProjectedCloud pc = project_cloud(view.pose, cloud);
    PerViewEval& ev = res.views[vi];
    ev.view = int(vi);
    ev.pi_g.assign(n, 0.0);
    ev.m1.assign(n, 0.0);
    ev.l2.assign(n, 0.0);

    if (opts.frozen_w)
      ev.w = (*opts.frozen_w)[vi];
    else if (opts.override_w) {
      ev.w.assign(n, 1.0);
      for (std::size_t j = 0; j < n; ++j)
        if (!pc.valid[j]) ev.w[j] = 0.0;
    } else {
      ev.w = indicator_weights(view.binary, pc);
    }
    if (opts.frozen_mu)
      ev.mu = (*opts.frozen_mu)[vi];
    else if (opts.override_mu)
      ev.mu.assign(n, params.mu_min);
    else
      ev.mu = boundary_bias(view.binary, pc, params.mu_scales, params.mu_min);

    const double diag = view.field.diagonal();
    std::vector<double> wexp(n);  // w_j * exp(mu_j)
    for (std::size_t j = 0; j < n; ++j)
      wexp[j] = pc.valid[j] ? ev.w[j] * std::exp(ev.mu[j]) : 0.0;

    std::vector<Vec3> vgrad;
    if (want_grad) vgrad.assign(n, Vec3{});

#pragma omp parallel for schedule(static)
    for (long long jj = 0; jj < (long long)n; ++jj) {
      std::size_t j = std::size_t(jj);
      if (!pc.valid[j]) continue;
      const Vec2 uv = pc.proj[j].uv;

      double pi, m1;
      Vec2 g_uv{};  // d(alpha*M1 + beta*L2_total)/d uv_j, before 1/(G N)
      if (opts.use_smoothed) {
        Vec2 uvp = view.field.to_padded(uv);
        pi = bilinear_sample(view.field.values, uvp);
        if (want_grad) {
          Vec2 gs = bilinear_gradient(view.field.values, uvp);
          g_uv = {-params.alpha * gs.x, -params.alpha * gs.y};
        }
      } else {
        pi = bilinear_sample(view.binary, uv);
        if (want_grad) {
          Vec2 gs = bilinear_gradient(view.binary, uv);
          g_uv = {-params.alpha * gs.x, -params.alpha * gs.y};
        }
      }
      m1 = 1.0 - pi;
      ev.pi_g[j] = pi;
      ev.m1[j] = m1;

      double inner = 0;
      Vec2 g_rep{};
      if (params.beta != 0 && n > 1 && ev.w[j] != 0) {
        const double expmu_j = std::exp(ev.mu[j]);
        for (std::size_t k = 0; k < n; ++k) {
          if (k == j || !pc.valid[k]) continue;
          Vec2 duv = uv - pc.proj[k].uv;
          double dist_px = duv.norm();
          double d = dist_px / diag;
          double e = std::exp(-d / params.theta);
          inner += ev.w[k] * e;
          if (want_grad && d >= 1e-8) {
            // contributions of this pair from both points' inner sums
            double coeff = ev.w[j] * ev.w[k] * (expmu_j + std::exp(ev.mu[k])) * e *
                           (-1.0 / params.theta) * inner_norm;
            double inv = coeff / (dist_px * diag);
            g_rep += Vec2{duv.x * inv, duv.y * inv};
          }
        }
        ev.l2[j] = wexp[j] * inner * inner_norm;
      }
      // w_j = 0 zeroes every pair coefficient touching j, so both the term
      // and its gradient vanish entirely.
      if (want_grad) {
        g_uv += Vec2{params.beta * g_rep.x, params.beta * g_rep.y};
        Mat23 jac = projection_jacobian(view.pose, cloud.points[j]);
        vgrad[j] = scale * jac.apply_transposed(g_uv);
      }
    }

    for (std::size_t j = 0; j < n; ++j) {
      ev.loss += params.alpha * ev.m1[j] + params.beta * ev.l2[j];
      if (want_grad) res.grad[j] += vgrad[j];
    }
    res.loss += ev.loss * scale;
  }
  return res;
}

inline EvalResult effective_loss(const PointCloud& cloud, const std::vector<ViewData>& views,
                                 const LossParams& params) {
  return evaluate_loss(cloud, views, params, {}, false);
}

inline std::vector<Vec3> effective_loss_grad(const PointCloud& cloud,
                                             const std::vector<ViewData>& views,
                                             const LossParams& params) {
  return evaluate_loss(cloud, views, params, {}, true).grad;
}

}  // namespace silfit
