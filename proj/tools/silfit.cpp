#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "silfit/io.hpp"
#include "silfit/loss.hpp"
#include "silfit/metrics.hpp"
#include "silfit/synth.hpp"

namespace fs = std::filesystem;
using namespace silfit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct SceneBundle {
  SceneManifest manifest;
  std::vector<ViewData> views;
  PointCloud gt;
  bool has_gt = false;
};

// accepts the scene directory or the scene.json path itself
SceneBundle load_scene(std::string dir, int pad) {
  if (dir.size() >= 10 && dir.substr(dir.size() - 10) == "scene.json") {
    auto slash = dir.find_last_of('/');
    dir = slash == std::string::npos ? "." : dir.substr(0, slash);
  }
  SceneBundle b;
  b.manifest = read_scene_manifest(dir + "/scene.json");
  b.views = load_views(b.manifest, dir, pad);
  if (!b.manifest.ground_truth.empty()) {
    b.gt = read_cloud_ply(dir + "/" + b.manifest.ground_truth);
    b.has_gt = true;
  }
  return b;
}

int cmd_synth(const std::string& shape, int views, int res, const std::string& out_dir,
              std::uint64_t seed, int gt_points, double radius, double elevation,
              double focal_scale) {
  TriMesh mesh = make_primitive(primitive_kind_from(shape));
  double focal = focal_scale * res;
  std::vector<CameraPose> cams = ring_cameras(views, radius, elevation, focal, res, res);

  fs::create_directories(out_dir);
  SceneManifest scene;
  scene.width = res;
  scene.height = res;
  scene.cameras = cams;
  for (int i = 0; i < views; ++i) {
    BinarySilhouette sil = rasterize_silhouette(mesh, cams[i]);
    char name[32];
    std::snprintf(name, sizeof name, "mask_%02d.pgm", i);
    write_silhouette_pgm(sil, out_dir + "/" + name);
    scene.views.emplace_back(name, i);
  }
  PointCloud gt = sample_surface(mesh, gt_points, seed);
  write_cloud_ply(gt, out_dir + "/gt.ply");
  write_mesh_obj(mesh, out_dir + "/mesh.obj");
  scene.ground_truth = "gt.ply";
  scene.mesh = "mesh.obj";
  write_scene_manifest(scene, out_dir + "/scene.json");
  std::printf("scene written to %s (%d views, %dx%d)\n", out_dir.c_str(), views, res, res);
  return kExitOk;
}

int cmd_fit(const std::string& scene_dir, const std::string& config_path,
            const std::string& out_dir, bool trace, const std::string& ablation) {
  std::string echo;
  FitConfig cfg = read_fit_config(config_path, &echo);
  if (!ablation.empty()) cfg.ablation_mode = ablation_mode_from(ablation);

  SceneBundle scene = load_scene(scene_dir, cfg.pad);
  FitReport report = fit(cfg, scene.views);
  report.config_echo = echo;

  fs::create_directories(out_dir);
  write_fit_report_json(report, cfg, out_dir + "/report.json");
  write_trace_csv(report, out_dir + "/trace.csv");
  write_cloud_ply(report.final_cloud, out_dir + "/cloud.ply");
  if (trace) {
    EvalResult final_eval = evaluate_loss(report.final_cloud, scene.views,
                                          params_for(cfg.ablation_mode, cfg.loss),
                                          options_for(cfg.ablation_mode), false);
    write_per_view_csv(final_eval.views, out_dir + "/per_view.csv");
    for (std::size_t i = 0; i < scene.views.size(); ++i) {
      ProjectedCloud pc = project_cloud(scene.views[i].pose, report.final_cloud);
      char name[32];
      std::snprintf(name, sizeof name, "overlay_%02zu.ppm", i);
      write_overlay(scene.views[i].sil, pc, out_dir + "/" + name);
    }
  }
  std::printf("final loss %.6g coverage %.4f (%d iterations, %.2fs)\n",
              report.loss_trace.back(), report.coverage_trace.back(), cfg.iterations,
              report.wall_time_sec);
  return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, bool x100, bool iou,
             int res) {
  PointCloud pred = normalize_cloud(read_cloud_ply(pred_path));
  PointCloud gt = normalize_cloud(read_cloud_ply(gt_path));
  double cd = chamfer_distance(pred, gt, x100);
  std::printf("chamfer%s %.9g\n", x100 ? "_x100" : "", cd);
  if (iou) {
    VoxelGrid a = voxelize(pred, res);
    VoxelGrid b = voxelize(gt, res);
    std::printf("iou %.9g\n", volumetric_iou(a, b));
  }
  return kExitOk;
}

int cmd_ablate(const std::string& scene_dir, const std::string& config_path,
               const std::string& out_csv, int seeds) {
  FitConfig cfg = read_fit_config(config_path);
  SceneBundle scene = load_scene(scene_dir, cfg.pad);
  if (!scene.has_gt) throw BadParams("ablate requires a scene with a ground-truth cloud");
  std::vector<std::uint64_t> seed_list;
  for (int s = 0; s < seeds; ++s) seed_list.push_back(cfg.seed + std::uint64_t(s));
  std::vector<AblationRow> rows = run_ablation(cfg, scene.views, scene.gt, seed_list);
  write_ablation_csv(rows, out_csv);
  std::printf("%zu ablation rows written to %s\n", rows.size(), out_csv.c_str());
  return kExitOk;
}

int cmd_inspect_field(const std::string& mask_path, int pad, const std::string& out_path) {
  BinarySilhouette sil = read_silhouette(mask_path);
  SmoothedField field = build_smoothed_field(sil, pad);
  write_grid_pgm(field.values, out_path);
  std::printf("smoothed field (%dx%d, pad %d) written to %s\n", field.width, field.height,
              pad, out_path.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"silhouette-driven point cloud fitting"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  std::string shape = "sphere", out_dir = "scene";
  int views = 4, res = 64, gt_points = 10000;
  std::uint64_t seed = 0;
  double radius = 2.0, elevation = 15.0, focal_scale = 1.2;
  synth->add_option("--shape", shape, "sphere|box|torus|chair|plane");
  synth->add_option("--views", views, "number of ring cameras");
  synth->add_option("--res", res, "image resolution (square)");
  synth->add_option("--out", out_dir, "output scene directory")->required();
  synth->add_option("--seed", seed, "sampling seed");
  synth->add_option("--gt-points", gt_points, "ground-truth surface samples");
  synth->add_option("--radius", radius, "camera ring radius");
  synth->add_option("--elevation", elevation, "camera elevation (degrees)");
  synth->add_option("--focal-scale", focal_scale, "focal length as a multiple of res");

  // fit
  auto* fitc = app.add_subcommand("fit", "fit a point cloud to a scene");
  std::string scene_dir, config_path, fit_out = "fit_out", ablation;
  bool trace = false;
  fitc->add_option("--scene", scene_dir, "scene directory")->required();
  fitc->add_option("--config", config_path, "fit config file")->required();
  fitc->add_option("--out", fit_out, "output directory");
  fitc->add_flag("--trace", trace, "write per-view term dumps and overlays");
  fitc->add_option("--ablation", ablation, "override ablation mode");

  // eval
  auto* evalc = app.add_subcommand("eval", "Chamfer distance / IoU between two clouds");
  std::string pred_path, gt_path;
  bool x100 = false, iou = false;
  int iou_res = 32;
  evalc->add_option("--pred", pred_path, "predicted cloud PLY")->required();
  evalc->add_option("--gt", gt_path, "ground-truth cloud PLY")->required();
  evalc->add_flag("--x100", x100, "report Chamfer distance multiplied by 100");
  evalc->add_flag("--iou", iou, "also report volumetric IoU");
  evalc->add_option("--res", iou_res, "IoU voxel resolution");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run the ablation table");
  std::string ablate_scene, ablate_config, ablate_out = "ablation.csv";
  int ablate_seeds = 1;
  ablate->add_option("--scene", ablate_scene, "scene directory")->required();
  ablate->add_option("--config", ablate_config, "fit config file")->required();
  ablate->add_option("--out", ablate_out, "output CSV path");
  ablate->add_option("--seeds", ablate_seeds, "number of seeds");

  // inspect-field
  auto* inspect = app.add_subcommand("inspect-field", "write a smoothed field as PGM");
  std::string inspect_mask, inspect_out = "field.pgm";
  int inspect_pad = 32;
  inspect->add_option("--mask", inspect_mask, "input mask (PGM/PNG)")->required();
  inspect->add_option("--pad", inspect_pad, "padding in pixels");
  inspect->add_option("--out", inspect_out, "output PGM path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(shape, views, res, out_dir, seed, gt_points, radius,
                                 elevation, focal_scale);
    if (*fitc) return cmd_fit(scene_dir, config_path, fit_out, trace, ablation);
    if (*evalc) return cmd_eval(pred_path, gt_path, x100, iou, iou_res);
    if (*ablate) return cmd_ablate(ablate_scene, ablate_config, ablate_out, ablate_seeds);
    if (*inspect) return cmd_inspect_field(inspect_mask, inspect_pad, inspect_out);
  } catch (const NumericFailure& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
