#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "silfit/fit.hpp"
#include "silfit/metrics.hpp"
#include "silfit/synth.hpp"

using namespace silfit;

namespace {

PointCloud random_cloud(int n, std::mt19937_64& rng, double extent = 1.0) {
  PointCloud c;
  for (int i = 0; i < n; ++i)
    c.points.push_back({(2 * uniform01(rng) - 1) * extent, (2 * uniform01(rng) - 1) * extent,
                        (2 * uniform01(rng) - 1) * extent});
  return c;
}

// O(|P1| * |P2|) oracle
double brute_force_chamfer(const PointCloud& p1, const PointCloud& p2) {
  auto one_way = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double sum = 0;
    for (const Vec3& a : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& b : to) best = std::min(best, (a - b).norm());
      sum += best;
    }
    return sum / double(from.size());
  };
  return one_way(p1.points, p2.points) + one_way(p2.points, p1.points);
}

}  // namespace

TEST_CASE("normalize_cloud: unit cube corners scale by 1/sqrt(3)") {
  PointCloud cube;
  for (int i = 0; i < 8; ++i)
    cube.points.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
  PointCloud n = normalize_cloud(cube);
  Vec3 lo = n.points[0], hi = n.points[0];
  for (const Vec3& p : n.points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  CHECK((hi - lo).norm() == Catch::Approx(1.0).margin(1e-12));
  CHECK(n.points[0].x == Catch::Approx(-0.5 / std::sqrt(3.0)).margin(1e-12));
}

TEST_CASE("normalize_cloud is idempotent") {
  std::mt19937_64 rng(4);
  PointCloud c = random_cloud(50, rng, 3.0);
  PointCloud once = normalize_cloud(c);
  PointCloud twice = normalize_cloud(once);
  for (std::size_t i = 0; i < once.size(); ++i)
    CHECK((once.points[i] - twice.points[i]).norm() < 1e-12);
}

TEST_CASE("normalize_cloud rejects degenerate clouds") {
  PointCloud same;
  same.points = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}};
  CHECK_THROWS_AS(normalize_cloud(same), DegenerateCloud);
}

TEST_CASE("chamfer: identical clouds give 0; unit separation gives 2") {
  std::mt19937_64 rng(8);
  PointCloud c = random_cloud(40, rng);
  CHECK(chamfer_distance(c, c) == 0.0);

  PointCloud a, b;
  a.points = {{0, 0, 0}};
  b.points = {{1, 0, 0}};
  CHECK(chamfer_distance(a, b) == Catch::Approx(2.0).margin(1e-12));
  CHECK(chamfer_distance(a, b, true) == Catch::Approx(200.0).margin(1e-10));
}

TEST_CASE("chamfer is symmetric and matches the brute-force oracle") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    PointCloud a = random_cloud(200, rng);
    PointCloud b = random_cloud(200, rng);
    double ab = chamfer_distance(a, b);
    double ba = chamfer_distance(b, a);
    CHECK(ab == ba);
    CHECK(std::abs(ab - brute_force_chamfer(a, b)) < 1e-12);
  }
}

TEST_CASE("chamfer handles clouds of very different sizes") {
  std::mt19937_64 rng(21);
  PointCloud a = random_cloud(5, rng);
  PointCloud b = random_cloud(1000, rng);
  CHECK(std::abs(chamfer_distance(a, b) - brute_force_chamfer(a, b)) < 1e-12);
}

TEST_CASE("chamfer is invariant under a common rigid transform") {
  std::mt19937_64 rng(30);
  PointCloud a = random_cloud(100, rng);
  PointCloud b = random_cloud(100, rng);
  double base = chamfer_distance(a, b);

  Quat q = Quat{0.6, 0.3, -0.5, 0.4}.normalized();
  Vec3 t{2.0, -1.0, 0.5};
  PointCloud ar, br;
  for (const Vec3& p : a.points) ar.points.push_back(q.rotate(p) + t);
  for (const Vec3& p : b.points) br.points.push_back(q.rotate(p) + t);
  CHECK(chamfer_distance(ar, br) == Catch::Approx(base).margin(1e-9));
}

TEST_CASE("chamfer rejects empty clouds") {
  PointCloud a, b;
  a.points = {{0, 0, 0}};
  CHECK_THROWS_AS(chamfer_distance(a, b), EmptyCloud);
}

TEST_CASE("voxelize: bounds center lands in the middle cell") {
  PointCloud c;
  c.points = {{0, 0, 0}};
  VoxelGrid g = voxelize(c, 32);
  CHECK(g.count() == 1);
  CHECK(g.occ[g.index(16, 16, 16)] == 1);
}

TEST_CASE("voxelize: empty cloud, out-of-bounds accounting, max-bound clamp") {
  PointCloud empty;
  VoxelGrid g = voxelize(empty, 8);
  CHECK(g.count() == 0);

  PointCloud c;
  c.points = {{0.5, 0.5, 0.5}, {2.0, 0, 0}, {0, 0, 0}};
  VoxelGrid h = voxelize(c, 8);
  CHECK(h.out_of_bounds == 1);
  CHECK(h.occ[h.index(7, 7, 7)] == 1);  // exact max corner clamps inward
}

TEST_CASE("voxelize matches brute-force binning on a sphere sample") {
  PointCloud sphere = sample_surface(make_sphere(3), 5000, 11);
  VoxelGrid g = voxelize(sphere, 32);

  std::vector<std::uint8_t> ref(32 * 32 * 32, 0);
  int oob = 0;
  for (const Vec3& p : sphere.points) {
    int x = int(std::floor((p.x + 0.5) * 32));
    int y = int(std::floor((p.y + 0.5) * 32));
    int z = int(std::floor((p.z + 0.5) * 32));
    if (x == 32 && p.x == 0.5) x = 31;
    if (y == 32 && p.y == 0.5) y = 31;
    if (z == 32 && p.z == 0.5) z = 31;
    if (x < 0 || y < 0 || z < 0 || x > 31 || y > 31 || z > 31) { ++oob; continue; }
    ref[(std::size_t(z) * 32 + y) * 32 + x] = 1;
  }
  CHECK(g.out_of_bounds == oob);
  for (std::size_t i = 0; i < ref.size(); ++i) REQUIRE(g.occ[i] == ref[i]);
}

TEST_CASE("IoU: identical 1, disjoint 0, both-empty 1, random popcount oracle") {
  std::mt19937_64 rng(44);
  PointCloud c = random_cloud(300, rng, 0.45);
  VoxelGrid a = voxelize(c, 16);
  CHECK(volumetric_iou(a, a) == 1.0);

  PointCloud left, right;
  left.points = {{-0.4, 0, 0}};
  right.points = {{0.4, 0, 0}};
  CHECK(volumetric_iou(voxelize(left, 16), voxelize(right, 16)) == 0.0);

  PointCloud none;
  CHECK(volumetric_iou(voxelize(none, 16), voxelize(none, 16)) == 1.0);

  VoxelGrid x = voxelize(random_cloud(200, rng, 0.45), 16);
  VoxelGrid y = voxelize(random_cloud(200, rng, 0.45), 16);
  long long inter = 0, uni = 0;
  for (std::size_t i = 0; i < x.occ.size(); ++i) {
    if (x.occ[i] && y.occ[i]) ++inter;
    if (x.occ[i] || y.occ[i]) ++uni;
  }
  CHECK(volumetric_iou(x, y) == Catch::Approx(double(inter) / double(uni)).margin(1e-15));
}

TEST_CASE("IoU rejects mismatched grids") {
  PointCloud c;
  c.points = {{0, 0, 0}};
  VoxelGrid a = voxelize(c, 16);
  VoxelGrid b = voxelize(c, 32);
  CHECK_THROWS_AS(volumetric_iou(a, b), GridMismatch);
}
