#include <doctest.h>

#include "absplat/optimizer.hpp"
#include "absplat/ply.hpp"
#include "absplat/trainer.hpp"
#include "fixtures.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace absplat;
using namespace absplat::testing;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "absplat_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

bool files_identical(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  return !sa.empty() && sa == sb;
}

TrainConfig quick_2d_config(int iterations) {
  TrainConfig config;
  config.regime = Regime::image2d;
  config.iterations = iterations;
  config.loss_lambda_dssim = 0.0;
  config.densify_enabled = false;
  config.opacity_reset_enabled = false;
  config.log_interval = 50;
  return config;
}

}  // namespace

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
  Rng rng(401);
  GaussianCloud cloud = random_cloud_2d(rng, 5, 32, 32);
  const GaussianCloud before = cloud;
  Adam adam(cloud.size(), cloud.coeffs_per_gaussian());
  ViewGradients grads;
  grads.resize(cloud);
  Adam::Lrs lrs;
  lrs.position = 0.01;
  adam.step(cloud, grads, lrs);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK((cloud.positions[i] - before.positions[i]).norm() == 0.0);
    CHECK((cloud.log_scales[i] - before.log_scales[i]).norm() == 0.0);
    CHECK(cloud.opacity_logits[i] == before.opacity_logits[i]);
  }
}

TEST_CASE("adam surgery preserves surviving moments exactly and zeroes new rows") {
  Rng rng(403);
  GaussianCloud cloudA = random_cloud_2d(rng, 4, 32, 32);
  GaussianCloud cloudB = cloudA;
  Adam adamA(4, cloudA.coeffs_per_gaussian());
  Adam adamB(4, cloudA.coeffs_per_gaussian());

  // Identical warmup on both optimizers builds nonzero moments.
  ViewGradients grads;
  grads.resize(cloudA);
  for (std::size_t i = 0; i < 4; ++i)
    grads.d_positions[i] = Vec3(0.1 * (i + 1), -0.2, 0.3);
  Adam::Lrs lrs;
  lrs.position = 0.01;
  adamA.step(cloudA, grads, lrs);
  adamA.step(cloudA, grads, lrs);
  adamB.step(cloudB, grads, lrs);
  adamB.step(cloudB, grads, lrs);
  const GaussianCloud snapshot = cloudA;

  // A continues untouched; B undergoes surgery with rows 3,1 surviving.
  ViewGradients zero;
  zero.resize(cloudA);
  adamA.step(cloudA, zero, lrs);
  const Vec3 deltaA1 = cloudA.positions[1] - snapshot.positions[1];
  const Vec3 deltaA3 = cloudA.positions[3] - snapshot.positions[3];
  CHECK(deltaA3.norm() > 0.0);  // momentum still carries

  adamB.surgery({3, 1, -1, -1});
  GaussianCloud rebuilt;
  rebuilt.resize(4);
  rebuilt.positions[0] = snapshot.positions[3];
  rebuilt.positions[1] = snapshot.positions[1];
  ViewGradients zero4;
  zero4.resize(rebuilt);
  adamB.step(rebuilt, zero4, lrs);

  // Survivors move exactly as their source rows would have; new rows do not.
  CHECK((rebuilt.positions[0] - (snapshot.positions[3] + deltaA3)).norm() == 0.0);
  CHECK((rebuilt.positions[1] - (snapshot.positions[1] + deltaA1)).norm() == 0.0);
  CHECK(rebuilt.positions[2].norm() == 0.0);
  CHECK(rebuilt.positions[3].norm() == 0.0);
}

TEST_CASE("ply round trip is bitwise stable") {
  Rng rng(405);
  GaussianCloud cloud = random_cloud_2d(rng, 17, 48, 48);
  const auto dir = temp_dir();
  const auto p1 = dir / "roundtrip_1.ply";
  const auto p2 = dir / "roundtrip_2.ply";

  save_ply(cloud, p1.string());
  GaussianCloud loaded = load_ply(p1.string());
  REQUIRE(loaded.size() == cloud.size());
  CHECK(loaded.sh_degree == cloud.sh_degree);
  save_ply(loaded, p2.string());
  CHECK(files_identical(p1, p2));

  // Values survive at float32 precision exactly.
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      CHECK(float(loaded.positions[i][k]) == float(cloud.positions[i][k]));
      CHECK(double(loaded.positions[i][k]) == double(float(cloud.positions[i][k])));
    }
    CHECK(float(loaded.opacity_logits[i]) == float(cloud.opacity_logits[i]));
  }
}

TEST_CASE("degree-3 ply interop carries 62 attributes in the expected layout") {
  // Reference file produced by an independent writer.
  const auto path = temp_dir() / "external_deg3.ply";
  const int n = 2, rest = 45;
  {
    std::ofstream out(path, std::ios::binary);
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << n << "\n";
    const char* heads[] = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (auto* h : heads) out << "property float " << h << "\n";
    for (int i = 0; i < rest; ++i) out << "property float f_rest_" << i << "\n";
    out << "property float opacity\n";
    for (int i = 0; i < 3; ++i) out << "property float scale_" << i << "\n";
    for (int i = 0; i < 4; ++i) out << "property float rot_" << i << "\n";
    out << "end_header\n";
    for (int v = 0; v < n; ++v) {
      for (int a = 0; a < 62; ++a) {
        const float value = float(v * 100 + a);
        out.write(reinterpret_cast<const char*>(&value), sizeof(float));
      }
    }
  }

  GaussianCloud cloud = load_ply(path.string());
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.sh_degree == 3);
  CHECK(cloud.coeffs_per_gaussian() == 48);
  CHECK(cloud.positions[1][0] == 100.0);
  // f_dc maps to coefficient 0 of each channel.
  CHECK(cloud.coeffs(0)[0] == 6.0f);
  CHECK(cloud.coeffs(0)[1] == 7.0f);
  CHECK(cloud.coeffs(0)[2] == 8.0f);
  // f_rest is channel-major: coefficient 1 of channel 0 is attribute 9.
  CHECK(cloud.coeffs(0)[3] == 9.0f);
  // ... and coefficient 1 of channel 1 starts after channel 0's 15 rest values.
  CHECK(cloud.coeffs(0)[4] == 24.0f);
  CHECK(cloud.opacity_logits[0] == 54.0);
  CHECK(cloud.rotations[0][3] == 61.0);

  // Writing it back keeps all 62 attributes.
  const auto echo = temp_dir() / "external_deg3_echo.ply";
  save_ply(cloud, echo.string());
  GaussianCloud echoed = load_ply(echo.string());
  CHECK(echoed.coeffs(0)[4] == 24.0f);
}

TEST_CASE("truncated ply fails without producing a cloud") {
  Rng rng(407);
  GaussianCloud cloud = random_cloud_2d(rng, 9, 32, 32);
  const auto full = temp_dir() / "full.ply";
  save_ply(cloud, full.string());

  std::ifstream in(full, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto cut = temp_dir() / "cut.ply";
  std::ofstream out(cut, std::ios::binary);
  out.write(bytes.data(), std::streamsize(bytes.size() - 40));
  out.close();
  CHECK_THROWS(load_ply(cut.string()));
}

TEST_CASE("zero-iteration train returns the cloud unchanged") {
  Rng rng(409);
  GaussianCloud cloud = random_cloud_2d(rng, 6, 32, 32);
  Scene scene;
  scene.targets.push_back(photo_like_image(32, 32, 2));
  const GaussianCloud before = cloud;
  TrainResult result = train(std::move(cloud), scene, quick_2d_config(0));
  REQUIRE(result.cloud.size() == before.size());
  for (std::size_t i = 0; i < before.size(); ++i)
    CHECK((result.cloud.positions[i] - before.positions[i]).norm() == 0.0);
  CHECK(result.log.empty());
}

TEST_CASE("training is deterministic for a fixed seed and any thread count") {
  Rng rng(411);
  Scene scene;
  scene.targets.push_back(photo_like_image(48, 48, 21));

  TrainConfig config = quick_2d_config(120);
  config.seed = 5;
  config.threads = 1;
  TrainConfig config4 = config;
  config4.threads = 4;

  GaussianCloud init = grid_init_for_image(scene.targets[0], 9);
  TrainResult a = train(init, scene, config);
  TrainResult b = train(init, scene, config4);

  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t r = 0; r < a.log.size(); ++r) {
    CHECK(a.log[r].loss == b.log[r].loss);
    CHECK(a.log[r].psnr == b.log[r].psnr);
    CHECK(a.log[r].num_gaussians == b.log[r].num_gaussians);
  }
  for (std::size_t i = 0; i < a.cloud.size(); ++i)
    CHECK((a.cloud.positions[i] - b.cloud.positions[i]).norm() == 0.0);
}

TEST_CASE("with densification disabled the gaussian count stays constant") {
  Scene scene;
  scene.targets.push_back(noise_texture(48, 48, 3, 4));
  GaussianCloud init = grid_init_for_image(scene.targets[0], 12);
  TrainConfig config = quick_2d_config(150);
  TrainResult result = train(init, scene, config);
  for (const auto& row : result.log) CHECK(row.num_gaussians == 12);
}

TEST_CASE("densification changes the count and keeps training stable") {
  Scene scene;
  scene.targets.push_back(noise_texture(64, 64, 9, 4));
  GaussianCloud init = grid_init_for_image(scene.targets[0], 4);

  TrainConfig config = quick_2d_config(400);
  config.densify_enabled = true;
  config.densify.densify_from = 100;
  config.densify.densify_until = 400;
  config.densify.densify_interval = 100;
  config.densify.tau_p = 1e-7;  // low bar so splits certainly fire
  config.densify.tau_s = 0.001;
  config.densify.guard_caps = false;
  config.seed = 3;

  TrainResult result = train(init, scene, config);
  CHECK(result.cloud.size() > 4);
  CHECK(std::isfinite(result.log.back().loss));
}

TEST_CASE("metrics csv is stable across identical runs") {
  Scene scene;
  scene.targets.push_back(photo_like_image(40, 40, 33));
  GaussianCloud init = grid_init_for_image(scene.targets[0], 4);
  TrainConfig config = quick_2d_config(100);
  config.seed = 11;

  const auto dir = temp_dir();
  TrainResult a = train(init, scene, config);
  TrainResult b = train(init, scene, config);
  write_metrics_csv(a.log, (dir / "m1.csv").string());
  write_metrics_csv(b.log, (dir / "m2.csv").string());
  CHECK(files_identical(dir / "m1.csv", dir / "m2.csv"));
}
