#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "qubonn/common.hpp"
#include "qubonn/dataio.hpp"
#include "qubonn/pipeline.hpp"
#include "qubonn/qnet.hpp"
#include "support/synthetic_mnist.hpp"

using namespace qubonn;
using namespace qubonn::dataio;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
  fs::path dir = fs::temp_directory_path() / "qubonn_dataio_test";
  fs::create_directories(dir);
  return dir;
}

BinaryImage image_with_zero_count(int group, int zeros) {
  BinaryImage img;
  // start fully nonzero, then zero out the requested count inside the group
  for (auto& p : img.pixels) p = 7;
  const int group_cols[3][2] = {{0, 9}, {9, 18}, {18, 28}};
  int placed = 0;
  for (int r = 0; r < kImageRows && placed < zeros; ++r) {
    for (int c = group_cols[group][0]; c < group_cols[group][1] && placed < zeros; ++c) {
      img.pixels[r * kImageCols + c] = 0;
      ++placed;
    }
  }
  return img;
}

}  // namespace

TEST_CASE("idx round trip is byte-identical") {
  auto dir = test_dir();
  auto images = testsupport::make_synthetic_split(20, 20, 5, 99);
  std::string ip = (dir / "imgs").string(), lp = (dir / "labs").string();
  write_idx(images, ip, lp);
  auto loaded = load_idx(ip, lp);
  REQUIRE(loaded.size() == images.size());
  std::string ip2 = (dir / "imgs2").string(), lp2 = (dir / "labs2").string();
  write_idx(loaded, ip2, lp2);
  CHECK(fnv1a_file_hex(ip) == fnv1a_file_hex(ip2));
  CHECK(fnv1a_file_hex(lp) == fnv1a_file_hex(lp2));
}

TEST_CASE("gzip inputs are decompressed transparently") {
  auto dir = test_dir();
  auto images = testsupport::make_synthetic_split(5, 5, 0, 7);
  std::string ip = (dir / "gz_imgs").string(), lp = (dir / "gz_labs").string();
  write_idx(images, ip, lp);
  for (const std::string& p : {ip, lp}) {
    std::ifstream in(p, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    gzFile gz = gzopen((p + ".gz").c_str(), "wb");
    REQUIRE(gz != nullptr);
    gzwrite(gz, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(gz);
  }
  auto loaded = load_idx(ip + ".gz", lp + ".gz");
  REQUIRE(loaded.size() == images.size());
  CHECK(loaded[0].pixels == images[0].pixels);
}

TEST_CASE("idx parse errors are distinct") {
  auto dir = test_dir();
  auto images = testsupport::make_synthetic_split(3, 3, 0, 5);
  std::string ip = (dir / "e_imgs").string(), lp = (dir / "e_labs").string();
  write_idx(images, ip, lp);

  // bad magic
  {
    std::fstream f(ip, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put(static_cast<char>(0x42));
  }
  CHECK_THROWS_WITH_AS(load_idx(ip, lp), doctest::Contains("magic"), std::runtime_error);
  write_idx(images, ip, lp);

  // truncated payload
  {
    std::ifstream in(ip, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() / 2);
    std::ofstream out(ip, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_WITH_AS(load_idx(ip, lp), doctest::Contains("truncated"), std::runtime_error);
  write_idx(images, ip, lp);

  // count mismatch
  auto fewer = images;
  fewer.pop_back();
  std::string lp_short = (dir / "e_labs_short").string();
  std::string ip_scratch = (dir / "e_imgs_scratch").string();
  write_idx(fewer, ip_scratch, lp_short);
  CHECK_THROWS_WITH_AS(load_idx(ip, lp_short), doctest::Contains("mismatch"), std::runtime_error);
}

TEST_CASE("filter_classes maps the kept pair to binary labels") {
  auto images = testsupport::make_synthetic_split(10, 12, 4, 31);
  auto kept = filter_classes(images, {4, 5});
  CHECK(kept.size() == 22);
  int ones = 0;
  for (const auto& im : kept) ones += im.label;
  CHECK(ones == 12);
  CHECK_THROWS_AS(filter_classes(images, {}), std::invalid_argument);
}

TEST_CASE("featurize extremes and monotonicity") {
  Thresholds t;
  t.low = {10.0, 10.0, 10.0};
  t.high = {200.0, 200.0, 200.0};

  BinaryImage blank;  // all-zero image
  auto counts = zero_counts(blank);
  CHECK(counts == std::array<int, 3>{252, 252, 280});
  auto f = featurize(blank, t);
  CHECK(f.values == std::array<int, 3>{1, 1, 1});

  BinaryImage full;
  for (auto& p : full.pixels) p = 255;
  CHECK(zero_counts(full) == std::array<int, 3>{0, 0, 0});
  CHECK(featurize(full, t).values == std::array<int, 3>{-1, -1, -1});

  // raising a pixel from zero can only decrease counts
  std::mt19937_64 rng(5);
  BinaryImage img = image_with_zero_count(1, 100);
  auto base_counts = zero_counts(img);
  for (int trial = 0; trial < 50; ++trial) {
    BinaryImage raised = img;
    int pos = static_cast<int>(rng() % kImageBytes);
    raised.pixels[pos] = std::max<uint8_t>(raised.pixels[pos], 1);
    auto c2 = zero_counts(raised);
    for (int g = 0; g < 3; ++g) CHECK(c2[g] <= base_counts[g]);
  }
}

TEST_CASE("threshold calibration uses nearest-rank tertiles") {
  std::vector<BinaryImage> train;
  for (int z = 0; z < 250; ++z) train.push_back(image_with_zero_count(0, z));
  Thresholds t = fit_thresholds(train);
  // nearest-rank: sorted[floor(N/3)] and sorted[floor(2N/3)]
  CHECK(t.low[0] == doctest::Approx(83.0));
  CHECK(t.high[0] == doctest::Approx(166.0));

  // duplicating the training set leaves thresholds unchanged
  std::vector<BinaryImage> doubled = train;
  doubled.insert(doubled.end(), train.begin(), train.end());
  Thresholds t2 = fit_thresholds(doubled);
  CHECK(t2.low[0] == t.low[0]);
  CHECK(t2.high[0] == t.high[0]);
}

TEST_CASE("degenerate count distribution collapses with a warning flag") {
  std::vector<BinaryImage> train(5, image_with_zero_count(0, 42));
  Thresholds t = fit_thresholds(train);
  CHECK(t.degenerate);
  CHECK(t.low[0] == doctest::Approx(41.5));
  CHECK(t.high[0] == doctest::Approx(42.5));
}

TEST_CASE("prototype collapsing") {
  std::mt19937_64 rng(43);
  std::vector<FeatVec> feats;
  for (int i = 0; i < 12000; ++i) {
    FeatVec f;
    for (int g = 0; g < 3; ++g) f.values[g] = static_cast<int>(rng() % 3) - 1;
    f.label = static_cast<int>(rng() & 1u);
    feats.push_back(f);
  }
  auto protos = prototypes(feats);
  CHECK(protos.size() <= 27);
  double total = 0.0;
  for (const auto& p : protos) total += p.weight;
  CHECK(total == doctest::Approx(12000.0));
}

TEST_CASE("majority ties resolve to label 0") {
  std::vector<FeatVec> feats;
  FeatVec a;
  a.values = {1, 0, -1};
  a.label = 0;
  FeatVec b = a;
  b.label = 1;
  feats = {a, b};
  auto protos = prototypes(feats);
  REQUIRE(protos.size() == 1);
  CHECK(protos[0].label == 0);
  CHECK(protos[0].weight == doctest::Approx(2.0));
}

TEST_CASE("prototypes preserve the weighted loss on label-pure groups") {
  // feature vectors constructed so every value pattern carries one label
  std::mt19937_64 rng(47);
  std::vector<FeatVec> feats;
  for (int i = 0; i < 3000; ++i) {
    FeatVec f;
    for (int g = 0; g < 3; ++g) f.values[g] = static_cast<int>(rng() % 3) - 1;
    f.label = (f.values[0] + f.values[1] + f.values[2]) > 0 ? 1 : 0;
    feats.push_back(f);
  }

  auto spec = pipeline::experiment_netspec({-8.0, -4.0, 0.0, 4.0, 8.0});
  qnet::QuantNet net(spec.dims, pwl::PiecewiseFn(spec.activation.breakpoints(),
                                                 spec.coded_activation_values()));
  net.weights = {{{1, 1, 1}, {1, 1, -1}}, {{1, 1}}};
  net.biases = {{-1, 1}, {-1}};

  double by_sample = 0.0;
  for (const auto& f : feats) {
    double out = qnet::forward(net, {double(f.values[0]), double(f.values[1]),
                                     double(f.values[2])});
    by_sample += (out - f.label) * (out - f.label);
  }
  double by_proto = 0.0;
  for (const auto& p : prototypes(feats)) {
    double out = qnet::forward(net, {double(p.values[0]), double(p.values[1]),
                                     double(p.values[2])});
    by_proto += p.weight * (out - p.label) * (out - p.label);
  }
  CHECK(by_proto == doctest::Approx(by_sample).epsilon(1e-9));
}

TEST_CASE("feature csv round trip") {
  auto dir = test_dir();
  std::vector<qcbo::Sample> samples = {{{-1.0, 0.0, 1.0}, 0, 3.0}, {{1.0, 1.0, -1.0}, 1, 2.5}};
  std::string path = (dir / "feats.csv").string();
  write_feature_csv(samples, path);
  auto back = read_feature_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].features == samples[0].features);
  CHECK(back[0].label == 0);
  CHECK(back[0].weight == 3.0);
  CHECK(back[1].label == 1);
}
