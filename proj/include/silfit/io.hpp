#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <png.h>

#include "silfit/camera.hpp"
#include "silfit/fit.hpp"
#include "silfit/silhouette.hpp"
#include "silfit/synth.hpp"

namespace silfit {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------- PGM / PNG

namespace detail {

inline int pnm_next_int(std::istream& in) {
  // skips whitespace and '#' comments
  while (true) {
    int c = in.peek();
    if (c == EOF) throw ParseError("unexpected end of PNM header");
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    break;
  }
  int v;
  if (!(in >> v)) throw ParseError("malformed PNM header");
  return v;
}

inline BinarySilhouette read_pgm_stream(std::istream& in) {
  char magic[2];
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5'))
    throw UnsupportedFormat("not a P2/P5 PGM file");
  bool binary = magic[1] == '5';
  int w = pnm_next_int(in);
  int h = pnm_next_int(in);
  int maxval = pnm_next_int(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw ParseError("bad PGM dimensions or maxval");

  BinarySilhouette sil;
  sil.width = w;
  sil.height = h;
  sil.mask.resize(std::size_t(w) * h);
  if (binary) {
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> buf(sil.mask.size());
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (std::size_t(in.gcount()) != buf.size()) throw ParseError("truncated PGM data");
    for (std::size_t i = 0; i < buf.size(); ++i) sil.mask[i] = buf[i] >= 128 ? 1 : 0;
  } else {
    for (std::size_t i = 0; i < sil.mask.size(); ++i) {
      int v;
      if (!(in >> v)) throw ParseError("truncated PGM data");
      sil.mask[i] = v >= 128 ? 1 : 0;
    }
  }
  return sil;
}

inline BinarySilhouette read_png_file(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw ParseError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw ParseError("malformed PNG: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_uint_32 w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<unsigned char> row(png_get_rowbytes(png, info));
  BinarySilhouette sil;
  sil.width = int(w);
  sil.height = int(h);
  sil.mask.resize(std::size_t(w) * h);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) sil.mask[std::size_t(y) * w + x] = row[x] >= 128 ? 1 : 0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return sil;
}

inline bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace detail

inline BinarySilhouette read_silhouette(const std::string& path) {
  if (detail::ends_with(path, ".png")) return detail::read_png_file(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return detail::read_pgm_stream(in);
}

inline void write_silhouette_pgm(const BinarySilhouette& sil, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << sil.width << " " << sil.height << "\n255\n";
  std::vector<unsigned char> buf(sil.mask.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = sil.mask[i] ? 255 : 0;
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw IoError("write failed: " + path);
}

// Grayscale dump of a real grid in [0,1], for inspect-field.
inline void write_grid_pgm(const Grid& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << g.width << " " << g.height << "\n255\n";
  std::vector<unsigned char> buf(g.v.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    double v = std::min(1.0, std::max(0.0, g.v[i]));
    buf[i] = (unsigned char)(v * 255.0 + 0.5);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw IoError("write failed: " + path);
}

// ----------------------------------------------------------------- PLY / OBJ

inline void write_cloud_ply(const PointCloud& cloud, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  std::fprintf(f,
               "ply\nformat ascii 1.0\nelement vertex %zu\n"
               "property double x\nproperty double y\nproperty double z\nend_header\n",
               cloud.size());
  for (const Vec3& p : cloud.points)
    std::fprintf(f, "%.12g %.12g %.12g\n", p.x, p.y, p.z);
  if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

inline PointCloud read_cloud_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw ParseError("not a PLY file: " + path);
  std::size_t count = 0;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (tok == "element") {
      std::string what;
      ls >> what >> count;
      if (what != "vertex") throw UnsupportedFormat("PLY element other than vertex");
    } else if (tok == "end_header") {
      break;
    }
  }
  if (!ascii) throw UnsupportedFormat("binary PLY not supported");
  PointCloud cloud;
  cloud.points.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> cloud.points[i].x >> cloud.points[i].y >> cloud.points[i].z))
      throw ParseError("truncated PLY vertex data");
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  }
  return cloud;
}

inline void write_mesh_obj(const TriMesh& mesh, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  for (const Vec3& v : mesh.vertices) std::fprintf(f, "v %.12g %.12g %.12g\n", v.x, v.y, v.z);
  for (auto t : mesh.triangles) std::fprintf(f, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
  if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

inline TriMesh read_mesh_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  TriMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "v") {
      Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z)) throw ParseError("bad OBJ vertex line");
      mesh.vertices.push_back(v);
    } else if (tok == "f") {
      int a, b, c;
      if (!(ls >> a >> b >> c)) throw ParseError("bad OBJ face line");
      mesh.triangles.push_back({a - 1, b - 1, c - 1});
    }
  }
  return mesh;
}

// ------------------------------------------------------------------ overlay

// PPM: grayscale mask with each valid projection drawn as a blue 3x3 dot.
inline void write_overlay(const BinarySilhouette& sil, const ProjectedCloud& pc,
                          const std::string& path) {
  std::vector<unsigned char> rgb(std::size_t(sil.width) * sil.height * 3);
  for (std::size_t i = 0; i < sil.mask.size(); ++i) {
    unsigned char v = sil.mask[i] ? 255 : 40;
    rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = v;
  }
  for (std::size_t j = 0; j < pc.proj.size(); ++j) {
    if (!pc.valid[j]) continue;
    int cx = int(std::floor(pc.proj[j].uv.x));
    int cy = int(std::floor(pc.proj[j].uv.y));
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        int x = cx + dx, y = cy + dy;
        if (x < 0 || y < 0 || x >= sil.width || y >= sil.height) continue;
        std::size_t i = (std::size_t(y) * sil.width + x) * 3;
        rgb[i] = 30;
        rgb[i + 1] = 60;
        rgb[i + 2] = 255;
      }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P6\n" << sil.width << " " << sil.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), std::streamsize(rgb.size()));
  if (!out) throw IoError("write failed: " + path);
}

// ----------------------------------------------------------- cameras / scene

inline ordered_json camera_to_json(const CameraPose& pose) {
  return ordered_json{{"qw", pose.rotation.w}, {"qx", pose.rotation.x},
                      {"qy", pose.rotation.y}, {"qz", pose.rotation.z},
                      {"tx", pose.translation.x}, {"ty", pose.translation.y},
                      {"tz", pose.translation.z}, {"focal", pose.focal},
                      {"cx", pose.principal_point.x}, {"cy", pose.principal_point.y},
                      {"width", pose.width}, {"height", pose.height},
                      {"orthographic", pose.orthographic}};
}

inline CameraPose camera_from_json(const nlohmann::json& j) {
  CameraPose pose;
  pose.rotation = {j.at("qw"), j.at("qx"), j.at("qy"), j.at("qz")};
  pose.translation = {j.at("tx"), j.at("ty"), j.at("tz")};
  pose.focal = j.at("focal");
  pose.principal_point = {j.at("cx"), j.at("cy")};
  pose.width = j.at("width");
  pose.height = j.at("height");
  pose.orthographic = j.value("orthographic", false);
  if (std::abs(pose.rotation.norm() - 1.0) > 1e-9)
    throw ParseError("camera quaternion is not unit length");
  if (pose.focal <= 0 || pose.width < 4 || pose.height < 4)
    throw ParseError("bad camera intrinsics");
  return pose;
}

struct SceneManifest {
  int width = 0, height = 0;
  std::vector<CameraPose> cameras;
  std::vector<std::pair<std::string, int>> views;  // (mask path, camera index)
  std::string ground_truth;  // optional PLY path, relative to scene dir
  std::string mesh;          // optional OBJ path
};

inline void write_scene_manifest(const SceneManifest& scene, const std::string& path) {
  ordered_json j;
  j["width"] = scene.width;
  j["height"] = scene.height;
  if (!scene.ground_truth.empty()) j["ground_truth"] = scene.ground_truth;
  if (!scene.mesh.empty()) j["mesh"] = scene.mesh;
  j["cameras"] = ordered_json::array();
  for (const auto& c : scene.cameras) j["cameras"].push_back(camera_to_json(c));
  j["views"] = ordered_json::array();
  for (const auto& [mask, cam] : scene.views)
    j["views"].push_back(ordered_json{{"mask", mask}, {"camera", cam}});
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

inline SceneManifest read_scene_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad scene JSON: ") + e.what());
  }
  SceneManifest scene;
  try {
    scene.width = j.at("width");
    scene.height = j.at("height");
    scene.ground_truth = j.value("ground_truth", "");
    scene.mesh = j.value("mesh", "");
    for (const auto& c : j.at("cameras")) scene.cameras.push_back(camera_from_json(c));
    for (const auto& v : j.at("views")) {
      int cam = v.at("camera");
      if (cam < 0 || cam >= int(scene.cameras.size()))
        throw ParseError("view references unknown camera");
      scene.views.emplace_back(v.at("mask").get<std::string>(), cam);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad scene JSON: ") + e.what());
  }
  return scene;
}

// Loads masks and builds smoothed fields for every view in the manifest.
inline std::vector<ViewData> load_views(const SceneManifest& scene, const std::string& dir,
                                        int pad) {
  std::vector<ViewData> views;
  for (const auto& [mask_path, cam] : scene.views) {
    BinarySilhouette sil = read_silhouette(dir + "/" + mask_path);
    if (sil.width != scene.width || sil.height != scene.height)
      throw InconsistentView("mask dimensions disagree with scene manifest");
    views.push_back(make_view(scene.cameras[cam], sil, pad));
  }
  return views;
}

// ------------------------------------------------------------------- config

// Flat key=value file; '#' starts a comment. Unknown keys are rejected.
inline FitConfig parse_fit_config(const std::string& text) {
  FitConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    try {
      if (key == "n_points") cfg.n_points = std::stoi(val);
      else if (key == "iterations") cfg.iterations = std::stoi(val);
      else if (key == "learning_rate") cfg.learning_rate = std::stod(val);
      else if (key == "beta1") cfg.beta1 = std::stod(val);
      else if (key == "beta2") cfg.beta2 = std::stod(val);
      else if (key == "adam_eps") cfg.adam_eps = std::stod(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "init_half_extent") cfg.init_half_extent = std::stod(val);
      else if (key == "pad") cfg.pad = std::stoi(val);
      else if (key == "alpha") cfg.loss.alpha = std::stod(val);
      else if (key == "beta") cfg.loss.beta = std::stod(val);
      else if (key == "theta") cfg.loss.theta = std::stod(val);
      else if (key == "mu_min") cfg.loss.mu_min = std::stod(val);
      else if (key == "normalize_inner_sum") cfg.loss.normalize_inner_sum = val == "1" || val == "true";
      else if (key == "determinism") cfg.determinism = val == "1" || val == "true";
      else if (key == "ablation_mode") cfg.ablation_mode = ablation_mode_from(val);
      else if (key == "views_used") cfg.views_used = std::stoi(val);
      else if (key == "mu_scales") {
        cfg.loss.mu_scales.clear();
        std::istringstream vs(val);
        std::string item;
        while (std::getline(vs, item, ',')) cfg.loss.mu_scales.push_back(std::stod(item));
      } else {
        throw ParseError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ParseError("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw ParseError("config line " + std::to_string(lineno) + ": value out of range");
    }
  }
  if (cfg.iterations < 1 || cfg.learning_rate <= 0 || cfg.n_points < 1 ||
      cfg.beta1 < 0 || cfg.beta1 >= 1 || cfg.beta2 < 0 || cfg.beta2 >= 1)
    throw ParseError("config violates parameter bounds");
  return cfg;
}

inline FitConfig read_fit_config(const std::string& path, std::string* echo = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  if (echo) *echo = ss.str();
  return parse_fit_config(ss.str());
}

// ------------------------------------------------------------------- report

inline void write_fit_report_json(const FitReport& report, const FitConfig& cfg,
                                  const std::string& path) {
  ordered_json j;
  j["n_points"] = cfg.n_points;
  j["iterations"] = cfg.iterations;
  j["seed"] = cfg.seed;
  j["ablation_mode"] = to_string(cfg.ablation_mode);
  j["final_loss"] = report.loss_trace.empty() ? 0.0 : report.loss_trace.back();
  j["final_coverage"] = report.coverage_trace.empty() ? 0.0 : report.coverage_trace.back();
  j["config_echo"] = report.config_echo;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

inline void write_trace_csv(const FitReport& report, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  std::fprintf(f, "iteration,loss,coverage\n");
  for (std::size_t i = 0; i < report.loss_trace.size(); ++i)
    std::fprintf(f, "%zu,%.12g,%.12g\n", i, report.loss_trace[i], report.coverage_trace[i]);
  if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

inline void write_per_view_csv(const std::vector<PerViewEval>& evals, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  std::fprintf(f, "view,point,pi_g,w,mu,m1,l2\n");
  for (const auto& ev : evals)
    for (std::size_t j = 0; j < ev.m1.size(); ++j)
      std::fprintf(f, "%d,%zu,%.12g,%.12g,%.12g,%.12g,%.12g\n", ev.view, j, ev.pi_g[j],
                   ev.w[j], ev.mu[j], ev.m1[j], ev.l2[j]);
  if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

inline void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  std::fprintf(f, "label,seed,chamfer_x100\n");
  for (const auto& r : rows)
    std::fprintf(f, "%s,%llu,%.12g\n", r.label.c_str(), (unsigned long long)r.seed, r.chamfer);
  if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

}  // namespace silfit
