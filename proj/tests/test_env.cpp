#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "rltrack/env.hpp"
#include "rltrack/errors.hpp"

using namespace rltrack;
namespace fs = std::filesystem;

namespace {

SynthConfig quiet_config() {
  SynthConfig cfg;
  cfg.grid = 8;
  cfg.seq_len = 12;
  cfg.speed_min = cfg.speed_max = 0.0;
  cfg.size_drift = 0.0;
  cfg.noise_std = 0.0;
  return cfg;
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("rltrack_env_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

template <typename A, typename B>
bool vec_eq(const A& a, const B& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

bool same_sequence(const SequenceData& a, const SequenceData& b, double tol) {
  if (a.length() != b.length() || a.feature_dim() != b.feature_dim()) return false;
  for (int t = 0; t < a.length(); ++t) {
    if ((a.frames[t].features - b.frames[t].features).cwiseAbs().maxCoeff() > tol)
      return false;
    if ((a.frames[t].location_hint - b.frames[t].location_hint).cwiseAbs().maxCoeff() > tol)
      return false;
    const Eigen::Vector4d da =
        box_to_vec(a.ground_truth[t]) - box_to_vec(b.ground_truth[t]);
    if (da.cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("generator is deterministic and seed-sensitive") {
  SynthConfig cfg;
  cfg.noise_std = 0.05;
  cfg.distractors = 2;
  const SequenceData a = generate_sequence(cfg, 42);
  const SequenceData b = generate_sequence(cfg, 42);
  CHECK(same_sequence(a, b, 0.0));  // bitwise

  const SequenceData c = generate_sequence(cfg, 43);
  CHECK_FALSE(same_sequence(a, c, 1e-9));
}

TEST_CASE("generated sequences satisfy the ground-truth invariants") {
  SynthConfig cfg;
  cfg.seq_len = 40;
  cfg.speed_max = 0.05;
  cfg.noise_std = 0.1;
  cfg.distractors = 1;
  for (std::uint64_t seed : {1u, 2u, 3u, 9u}) {
    const SequenceData seq = generate_sequence(cfg, seed);
    REQUIRE(seq.length() == cfg.seq_len);
    REQUIRE(static_cast<int>(seq.ground_truth.size()) == cfg.seq_len);
    CHECK(seq.feature_dim() == cfg.grid * cfg.grid);
    for (const BBox& g : seq.ground_truth) {
      CHECK(g.w > 0.0);
      CHECK(g.h > 0.0);
      CHECK(g.cx - g.w / 2 >= -1e-12);
      CHECK(g.cx + g.w / 2 <= 1.0 + 1e-12);
      CHECK(g.cy - g.h / 2 >= -1e-12);
      CHECK(g.cy + g.h / 2 <= 1.0 + 1e-12);
    }
    for (int i = 0; i < seq.feature_dim(); ++i) {
      CHECK(seq.frames[1].features[i] >= 0.0);
      CHECK(seq.frames[1].features[i] <= 1.0);
    }
  }
}

TEST_CASE("location hint carries the truth only at frame 0") {
  const SequenceData seq = generate_sequence(quiet_config(), 5);
  CHECK(vec_eq(seq.frames[0].location_hint, box_to_vec(seq.ground_truth[0])));
  for (int t = 1; t < seq.length(); ++t)
    CHECK(seq.frames[t].location_hint.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("static noise-free raster matches the box footprint") {
  const SynthConfig cfg = quiet_config();
  const SequenceData seq = generate_sequence(cfg, 17);
  const BBox g = seq.ground_truth[0];
  const auto& f = seq.frames[0].features;

  // independent coverage computation per cell
  const double step = 1.0 / cfg.grid;
  for (int r = 0; r < cfg.grid; ++r) {
    for (int c = 0; c < cfg.grid; ++c) {
      const double x0 = c * step, x1 = (c + 1) * step;
      const double y0 = r * step, y1 = (r + 1) * step;
      const double ix =
          std::min(g.cx + g.w / 2, x1) - std::max(g.cx - g.w / 2, x0);
      const double iy =
          std::min(g.cy + g.h / 2, y1) - std::max(g.cy - g.h / 2, y0);
      const double expected =
          (ix > 0 && iy > 0) ? (ix * iy) / (step * step) : 0.0;
      CHECK(f[r * cfg.grid + c] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  const int brightest =
      static_cast<int>(std::max_element(f.data(), f.data() + f.size()) - f.data());
  const double bx0 = (brightest % cfg.grid) * step;
  const double by0 = (brightest / cfg.grid) * step;
  CHECK(bx0 + step > g.cx - g.w / 2);
  CHECK(bx0 < g.cx + g.w / 2);
  CHECK(by0 + step > g.cy - g.h / 2);
  CHECK(by0 < g.cy + g.h / 2);
}

TEST_CASE("target follows linear motion away from the borders") {
  SynthConfig cfg = quiet_config();
  cfg.seq_len = 11;
  cfg.speed_min = cfg.speed_max = 0.01;

  bool checked = false;
  for (std::uint64_t seed = 0; seed < 64 && !checked; ++seed) {
    const SequenceData seq = generate_sequence(cfg, seed);
    const BBox g0 = seq.ground_truth[0];
    const double dx = seq.ground_truth[1].cx - g0.cx;
    const double dy = seq.ground_truth[1].cy - g0.cy;
    // skip starts whose 10-frame path would touch a border
    const double margin_x = std::min(g0.cx - g0.w / 2, 1.0 - g0.cx - g0.w / 2);
    const double margin_y = std::min(g0.cy - g0.h / 2, 1.0 - g0.cy - g0.h / 2);
    if (margin_x < 0.12 || margin_y < 0.12) continue;

    CHECK(std::sqrt(dx * dx + dy * dy) == doctest::Approx(0.01).epsilon(1e-9));
    for (int t = 0; t <= 10; ++t) {
      CHECK(seq.ground_truth[t].cx == doctest::Approx(g0.cx + t * dx).epsilon(1e-9));
      CHECK(seq.ground_truth[t].cy == doctest::Approx(g0.cy + t * dy).epsilon(1e-9));
    }
    checked = true;
  }
  CHECK(checked);
}

TEST_CASE("invalid generator config names the field") {
  SynthConfig cfg;
  cfg.grid = 2;
  CHECK_THROWS_WITH_AS(generate_sequence(cfg, 1),
                       doctest::Contains("grid"), ConfigError);
  cfg = SynthConfig{};
  cfg.seq_len = 1;
  CHECK_THROWS_WITH_AS(generate_sequence(cfg, 1),
                       doctest::Contains("seq_len"), ConfigError);
  cfg = SynthConfig{};
  cfg.noise_std = -0.1;
  CHECK_THROWS_WITH_AS(generate_sequence(cfg, 1),
                       doctest::Contains("noise_std"), ConfigError);
}

TEST_CASE("save/load round-trip reproduces the sequence") {
  const fs::path dir = temp_dir("roundtrip");
  SynthConfig cfg;
  cfg.noise_std = 0.03;
  cfg.distractors = 1;
  cfg.seq_len = 9;
  const SequenceData seq = generate_sequence(cfg, 77);
  save_sequence(seq, dir / "a.features.txt", dir / "a.gt.txt");
  const SequenceData loaded =
      load_sequence(dir / "a.features.txt", dir / "a.gt.txt", cfg.img_w, cfg.img_h);
  CHECK(same_sequence(seq, loaded, 1e-6));
  CHECK(loaded.name == "a");
}

TEST_CASE("ground-truth corner-to-center conversion") {
  const fs::path dir = temp_dir("convert");
  write_file(dir / "f.txt", "# dim=2 frames=1\n0.5 0.25\n");
  write_file(dir / "g.txt", "10,20,40,60\n");
  const SequenceData seq = load_sequence(dir / "f.txt", dir / "g.txt", 100, 100);
  REQUIRE(seq.length() == 1);
  CHECK(seq.ground_truth[0].cx == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(seq.ground_truth[0].cy == doctest::Approx(0.50).epsilon(1e-12));
  CHECK(seq.ground_truth[0].w == doctest::Approx(0.40).epsilon(1e-12));
  CHECK(seq.ground_truth[0].h == doctest::Approx(0.60).epsilon(1e-12));
  CHECK(vec_eq(seq.frames[0].location_hint, box_to_vec(seq.ground_truth[0])));
}

TEST_CASE("loader accepts tabs and CRLF line endings") {
  const fs::path dir = temp_dir("tabs");
  write_file(dir / "f.txt", "# dim=2 frames=2\r\n0.1 0.2\r\n0.3 0.4\r\n");
  write_file(dir / "g.txt", "10\t20\t40\t60\r\n12,22,40,60\n");
  const SequenceData seq = load_sequence(dir / "f.txt", dir / "g.txt", 100, 100);
  CHECK(seq.length() == 2);
  CHECK(seq.frames[1].features[1] == doctest::Approx(0.4));
}

TEST_CASE("loader error paths") {
  const fs::path dir = temp_dir("errors");

  SUBCASE("empty feature file") {
    write_file(dir / "f.txt", "");
    write_file(dir / "g.txt", "10,20,40,60\n");
    CHECK_THROWS_AS(load_sequence(dir / "f.txt", dir / "g.txt", 100, 100), DataError);
  }
  SUBCASE("header with no rows") {
    write_file(dir / "f.txt", "# dim=2 frames=0\n");
    write_file(dir / "g.txt", "10,20,40,60\n");
    CHECK_THROWS_WITH_AS(load_sequence(dir / "f.txt", dir / "g.txt", 100, 100),
                         doctest::Contains("no feature rows"), DataError);
  }
  SUBCASE("row count mismatch reports both counts") {
    write_file(dir / "f.txt", "# dim=1 frames=3\n1\n2\n3\n");
    write_file(dir / "g.txt", "10,20,40,60\n10,20,40,60\n");
    try {
      load_sequence(dir / "f.txt", dir / "g.txt", 100, 100);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find('3') != std::string::npos);
      CHECK(msg.find('2') != std::string::npos);
    }
  }
  SUBCASE("header frame count must match rows") {
    write_file(dir / "f.txt", "# dim=1 frames=5\n1\n2\n");
    write_file(dir / "g.txt", "10,20,40,60\n10,20,40,60\n");
    CHECK_THROWS_WITH_AS(load_sequence(dir / "f.txt", dir / "g.txt", 100, 100),
                         doctest::Contains("declares 5"), DataError);
  }
  SUBCASE("malformed feature value reports the line") {
    write_file(dir / "f.txt", "# dim=2 frames=2\n0.1 0.2\n0.3 oops\n");
    write_file(dir / "g.txt", "10,20,40,60\n10,20,40,60\n");
    CHECK_THROWS_WITH_AS(load_sequence(dir / "f.txt", dir / "g.txt", 100, 100),
                         doctest::Contains("line 3"), DataError);
  }
  SUBCASE("box outside the image reports the line") {
    write_file(dir / "f.txt", "# dim=1 frames=2\n1\n2\n");
    write_file(dir / "g.txt", "10,20,40,60\n95,20,40,60\n");
    CHECK_THROWS_WITH_AS(load_sequence(dir / "f.txt", dir / "g.txt", 100, 100),
                         doctest::Contains("line 2"), DataError);
  }
  SUBCASE("non-positive box size reports the line") {
    write_file(dir / "f.txt", "# dim=1 frames=1\n1\n");
    write_file(dir / "g.txt", "10,20,0,60\n");
    CHECK_THROWS_WITH_AS(load_sequence(dir / "f.txt", dir / "g.txt", 100, 100),
                         doctest::Contains("line 1"), DataError);
  }
}

TEST_CASE("train/eval split follows the first-third protocol") {
  SynthConfig cfg = quiet_config();
  cfg.seq_len = 30;
  const SequenceData seq = generate_sequence(cfg, 3);
  const TrainEvalSplit split = split_train_eval(seq);
  CHECK(split.train.length() == 10);
  CHECK(split.eval.length() == 30);
  CHECK(split_point(seq.length()) == 10);
  CHECK(same_sequence(split.eval, seq, 0.0));
  for (int t = 0; t < 10; ++t)
    CHECK(vec_eq(split.train.frames[t].features, seq.frames[t].features));

  cfg.seq_len = 3;
  const TrainEvalSplit tiny = split_train_eval(generate_sequence(cfg, 3));
  CHECK(tiny.train.length() == 1);
  CHECK(tiny.eval.length() == 3);

  cfg.seq_len = 2;
  CHECK_THROWS_AS(split_train_eval(generate_sequence(cfg, 3)), DataError);
}
