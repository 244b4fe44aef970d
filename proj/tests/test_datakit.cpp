#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "panforge/data/manifest.hpp"
#include "panforge/metrics/quality.hpp"

using namespace panforge;
using namespace panforge::data;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct TmpDir {
  fs::path path;
  TmpDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("panforge_data_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TmpDir() { std::error_code ec; fs::remove_all(path, ec); }
};

bool same_values(const ImageTensor& a, const ImageTensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), a.values().size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("pixel mapping endpoints and midpoint") {
  CHECK(to_unit(0) == Approx(-1.0));
  CHECK(to_unit(255) == Approx(1.0));
  CHECK(to_unit(128) == Approx(2.0 * 128 / 255 - 1.0).margin(1e-7));
  CHECK(to_byte(-1.0f) == 0);
  CHECK(to_byte(1.0f) == 255);
  CHECK(to_byte(2.0f) == 255);
  CHECK(to_byte(-3.0f) == 0);
}

TEST_CASE("png roundtrip stays within quantization error") {
  Rng rng(1);
  ImageTensor img(Shape{3, 32, 48});
  for (auto& v : img.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  TmpDir tmp;
  const fs::path p = tmp.path / "x.png";
  save_image(img, p);
  const ImageTensor back = load_image(p);
  REQUIRE(back.shape() == img.shape());
  float worst = 0;
  for (std::size_t i = 0; i < img.values().size(); ++i)
    worst = std::max(worst, std::abs(img.values()[i] - back.values()[i]));
  CHECK(worst <= 1.0f / 255.0f + 1e-6f);

  // saving the loaded image again reproduces identical bytes
  const fs::path q = tmp.path / "y.png";
  save_image(back, q);
  std::ifstream fa(p, std::ios::binary), fb(q, std::ios::binary);
  std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ba == bb);
}

TEST_CASE("pgm roundtrip and gray replication") {
  Rng rng(2);
  ImageTensor img(Shape{3, 16, 16});
  // gray content so the luma conversion is lossless up to quantization
  const std::int64_t plane = 16 * 16;
  for (std::int64_t i = 0; i < plane; ++i) {
    const float v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (int c = 0; c < 3; ++c) img.values()[c * plane + i] = v;
  }
  TmpDir tmp;
  const fs::path p = tmp.path / "g.pgm";
  save_image(img, p);
  const ImageTensor back = load_image(p);
  for (std::int64_t i = 0; i < plane; ++i) {
    CHECK(std::abs(back.values()[i] - img.values()[i]) <= 1.0f / 255.0f + 1e-6f);
    CHECK(back.values()[i] == back.values()[plane + i]);  // channels replicated
  }
}

TEST_CASE("image io errors are named") {
  TmpDir tmp;
  const fs::path junk = tmp.path / "junk.png";
  std::ofstream(junk, std::ios::binary) << "not an image at all";
  CHECK_THROWS_AS(load_image(junk), IoError);

  // 16-bit PGM is an unsupported bit depth
  const fs::path deep = tmp.path / "deep.pgm";
  std::ofstream(deep, std::ios::binary) << "P5\n2 2\n65535\n\0\0\0\0\0\0\0\0";
  try {
    load_image(deep);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("bit depth") != std::string::npos);
  }

  // truncated PNG
  Rng rng(3);
  ImageTensor img(Shape{3, 16, 16});
  const fs::path whole = tmp.path / "whole.png";
  save_image(img, whole);
  std::ifstream in(whole, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const fs::path cut = tmp.path / "cut.png";
  std::ofstream(cut, std::ios::binary).write(bytes.data(), static_cast<long>(bytes.size() - 7));
  CHECK_THROWS_AS(load_image(cut), IoError);
}

TEST_CASE("streak pairs: empty density, monotone corruption, determinism") {
  StreakParams quiet;
  quiet.density = 0.0;
  auto clean = gen_streak_pair(9, 64, 64, quiet);
  CHECK(same_values(clean.input, clean.target));

  double prev = std::numeric_limits<double>::infinity();
  for (double density : {0.001, 0.01, 0.05}) {
    StreakParams p;
    p.density = density;
    auto s = gen_streak_pair(9, 64, 64, p);
    const double q = metrics::psnr(metrics::to_gray(s.input), metrics::to_gray(s.target));
    CHECK(q < prev);
    prev = q;
  }

  auto a = gen_streak_pair(42, 64, 64);
  auto b = gen_streak_pair(42, 64, 64);
  CHECK(same_values(a.input, b.input));
  CHECK(same_values(a.target, b.target));
  auto c = gen_streak_pair(43, 64, 64);
  CHECK_FALSE(same_values(a.input, c.input));
}

TEST_CASE("inpaint pairs: exact hole, rest untouched, id records geometry") {
  auto s = gen_inpaint_pair(7, 64, 64, 0.5);
  const std::int64_t plane = 64 * 64;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const float in = s.input.values()[c * plane + y * 64 + x];
        const float gt = s.target.values()[c * plane + y * 64 + x];
        const bool in_hole = y >= 16 && y < 48 && x >= 16 && x < 48;
        if (in_hole)
          CHECK(in == 0.0f);
        else
          CHECK(in == gt);
      }
  CHECK(s.id.find("hole32") != std::string::npos);
  CHECK_THROWS_AS(gen_inpaint_pair(7, 64, 64, 0.0), ConfigError);
  CHECK_THROWS_AS(gen_inpaint_pair(7, 64, 64, 1.0), ConfigError);

  // tiny fraction rounds to an empty hole: input equals target
  auto whole = gen_inpaint_pair(7, 64, 64, 0.004);
  CHECK(same_values(whole.input, whole.target));
}

TEST_CASE("label pairs: palette count, silhouette preservation, determinism") {
  auto one = gen_label_shape_pair(5, 64, 64, 1);
  std::set<std::array<float, 3>> colors;
  const std::int64_t plane = 64 * 64;
  for (std::int64_t i = 0; i < plane; ++i)
    colors.insert({one.input.values()[i], one.input.values()[plane + i],
                   one.input.values()[2 * plane + i]});
  CHECK(colors.size() == 2);

  // mask-extraction oracle: the layout map determines both images
  const auto layout = gen_label_layout(11, 64, 64, 3);
  auto pair = gen_label_shape_pair(11, 64, 64, 3);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const int k = layout[static_cast<std::size_t>(y) * 64 + x];
      float flat[3], tex[3];
      data::detail::label_color(k, flat);
      data::detail::shape_texture(k, x, y, 64, 64, tex);
      for (int c = 0; c < 3; ++c) {
        CHECK(pair.input.values()[c * plane + y * 64 + x] == flat[c]);
        CHECK(pair.target.values()[c * plane + y * 64 + x] == tex[c]);
      }
    }

  auto again = gen_label_shape_pair(11, 64, 64, 3);
  CHECK(same_values(pair.input, again.input));
  CHECK(same_values(pair.target, again.target));
  CHECK_THROWS_AS(gen_label_shape_pair(5, 64, 64, 0), ConfigError);
}

TEST_CASE("generated pairs satisfy range and shape invariants across seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (const char* task : {"streak", "inpaint", "labels"}) {
      GendataParams p;
      p.task = task;
      PairedSample s = generate_sample(p, seed);
      REQUIRE(s.input.shape() == Shape{3, 64, 64});
      REQUIRE(s.target.shape() == s.input.shape());
      for (float v : s.input.values()) {
        REQUIRE(v >= -1.0f);
        REQUIRE(v <= 1.0f);
      }
      for (float v : s.target.values()) {
        REQUIRE(v >= -1.0f);
        REQUIRE(v <= 1.0f);
      }
    }
  }
}

TEST_CASE("build_manifest writes both splits with disjoint ids and reproducibly") {
  TmpDir tmp;
  GendataParams p;
  p.n_train = 8;
  p.n_test = 2;
  p.seed = 21;
  const auto [train_path, test_path] = build_manifest(p, tmp.path / "ds");

  auto train = load_manifest(train_path);
  auto test = load_manifest(test_path);
  CHECK(train.entries.size() == 8);
  CHECK(test.entries.size() == 2);
  CHECK(train.task == "streak");
  CHECK(train.split == "train");
  CHECK(test.split == "test");

  std::set<std::string> ids;
  for (const auto& e : train.entries) ids.insert(e.id);
  for (const auto& e : test.entries) ids.insert(e.id);
  CHECK(ids.size() == 10);

  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(tmp.path / "ds"))
    if (e.path().extension() == ".png") ++files;
  CHECK(files == 20);  // input + target per pair

  auto samples = load_samples(test);
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].input.shape() == Shape{3, 64, 64});

  // rebuilding with the same seed reproduces identical bytes
  const auto digest = [&](const fs::path& dir) {
    std::string all;
    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& q : paths) {
      std::ifstream f(q, std::ios::binary);
      all += std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    }
    return all;
  };
  const std::string before = digest(tmp.path / "ds");
  build_manifest(p, tmp.path / "ds");
  CHECK(digest(tmp.path / "ds") == before);

  CHECK_THROWS_AS(build_manifest(p, fs::path("/proc/definitely_unwritable/x")), IoError);
}
