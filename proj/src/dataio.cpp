#include "qubonn/dataio.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "qubonn/common.hpp"

namespace qubonn::dataio {

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());

  if (has_suffix(path, ".gz")) {
    std::vector<uint8_t> out;
    out.reserve(bytes.size() * 4);
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
      throw std::runtime_error("inflateInit failed for " + path);
    }
    zs.next_in = bytes.data();
    zs.avail_in = static_cast<uInt>(bytes.size());
    std::vector<uint8_t> chunk(1 << 16);
    int rc = Z_OK;
    do {
      zs.next_out = chunk.data();
      zs.avail_out = static_cast<uInt>(chunk.size());
      rc = inflate(&zs, Z_NO_FLUSH);
      if (rc != Z_OK && rc != Z_STREAM_END) {
        inflateEnd(&zs);
        throw std::runtime_error("gzip decompression failed for " + path);
      }
      out.insert(out.end(), chunk.begin(), chunk.begin() + (chunk.size() - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
  }
  return bytes;
}

uint32_t read_be32(const std::vector<uint8_t>& b, std::size_t off) {
  if (off + 4 > b.size()) {
    throw std::runtime_error("IDX header truncated");
  }
  return (uint32_t(b[off]) << 24) | (uint32_t(b[off + 1]) << 16) | (uint32_t(b[off + 2]) << 8) |
         uint32_t(b[off + 3]);
}

void write_be32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(static_cast<uint8_t>(v >> 24));
  b.push_back(static_cast<uint8_t>(v >> 16));
  b.push_back(static_cast<uint8_t>(v >> 8));
  b.push_back(static_cast<uint8_t>(v));
}

}  // namespace

std::vector<RawImage> load_idx(const std::string& images_path, const std::string& labels_path) {
  std::vector<uint8_t> img = read_file_bytes(images_path);
  std::vector<uint8_t> lab = read_file_bytes(labels_path);

  if (read_be32(img, 0) != 0x00000803u) {
    throw std::runtime_error("bad image magic in " + images_path);
  }
  if (read_be32(lab, 0) != 0x00000801u) {
    throw std::runtime_error("bad label magic in " + labels_path);
  }
  uint32_t count = read_be32(img, 4);
  uint32_t rows = read_be32(img, 8);
  uint32_t cols = read_be32(img, 12);
  if (rows != kImageRows || cols != kImageCols) {
    throw std::runtime_error("unexpected image dimensions in " + images_path);
  }
  uint32_t label_count = read_be32(lab, 4);
  if (count != label_count) {
    throw std::runtime_error("image/label count mismatch: " + std::to_string(count) + " vs " +
                             std::to_string(label_count));
  }
  if (img.size() < 16 + std::size_t(count) * kImageBytes) {
    throw std::runtime_error("image payload truncated in " + images_path);
  }
  if (lab.size() < 8 + std::size_t(count)) {
    throw std::runtime_error("label payload truncated in " + labels_path);
  }

  std::vector<RawImage> out(count);
  for (uint32_t i = 0; i < count; ++i) {
    std::memcpy(out[i].pixels.data(), img.data() + 16 + std::size_t(i) * kImageBytes, kImageBytes);
    uint8_t l = lab[8 + i];
    if (l > 9) {
      throw std::runtime_error("label out of range in " + labels_path);
    }
    out[i].label = l;
  }
  return out;
}

void write_idx(const std::vector<RawImage>& images, const std::string& images_path,
               const std::string& labels_path) {
  std::vector<uint8_t> img;
  img.reserve(16 + images.size() * kImageBytes);
  write_be32(img, 0x00000803u);
  write_be32(img, static_cast<uint32_t>(images.size()));
  write_be32(img, kImageRows);
  write_be32(img, kImageCols);
  for (const auto& im : images) {
    img.insert(img.end(), im.pixels.begin(), im.pixels.end());
  }
  std::vector<uint8_t> lab;
  lab.reserve(8 + images.size());
  write_be32(lab, 0x00000801u);
  write_be32(lab, static_cast<uint32_t>(images.size()));
  for (const auto& im : images) lab.push_back(im.label);

  std::ofstream fo(images_path, std::ios::binary);
  fo.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
  std::ofstream fl(labels_path, std::ios::binary);
  fl.write(reinterpret_cast<const char*>(lab.data()), static_cast<std::streamsize>(lab.size()));
  if (!fo || !fl) {
    throw std::runtime_error("failed writing IDX files");
  }
}

std::vector<BinaryImage> filter_classes(const std::vector<RawImage>& images,
                                        const std::vector<int>& keep) {
  if (keep.size() != 2) {
    throw std::invalid_argument("need exactly two classes to keep");
  }
  std::vector<BinaryImage> out;
  for (const auto& im : images) {
    int label = -1;
    if (im.label == keep[0]) label = 0;
    if (im.label == keep[1]) label = 1;
    if (label < 0) continue;
    BinaryImage b;
    b.pixels = im.pixels;
    b.label = label;
    out.push_back(b);
  }
  return out;
}

std::array<int, 3> zero_counts(const BinaryImage& img) {
  std::array<int, 3> counts{0, 0, 0};
  for (int r = 0; r < kImageRows; ++r) {
    for (int c = 0; c < kImageCols; ++c) {
      if (img.pixels[r * kImageCols + c] == 0) {
        int g = c < 9 ? 0 : (c < 18 ? 1 : 2);
        ++counts[g];
      }
    }
  }
  return counts;
}

FeatVec featurize(const BinaryImage& img, const Thresholds& thresholds) {
  FeatVec f;
  f.label = img.label;
  auto counts = zero_counts(img);
  for (int g = 0; g < 3; ++g) {
    if (!(thresholds.low[g] < thresholds.high[g])) {
      throw std::invalid_argument("thresholds must satisfy low < high");
    }
    double z = counts[g];
    f.values[g] = z < thresholds.low[g] ? -1 : (z < thresholds.high[g] ? 0 : 1);
  }
  return f;
}

Thresholds fit_thresholds(const std::vector<BinaryImage>& train) {
  if (train.empty()) {
    throw std::invalid_argument("threshold calibration needs samples");
  }
  Thresholds t;
  for (int g = 0; g < 3; ++g) {
    std::vector<int> counts;
    counts.reserve(train.size());
    for (const auto& im : train) counts.push_back(zero_counts(im)[g]);
    std::sort(counts.begin(), counts.end());
    if (counts.front() == counts.back()) {
      t.degenerate = true;
      t.low[g] = counts.front() - 0.5;
      t.high[g] = counts.front() + 0.5;
      continue;
    }
    // nearest-rank tertiles
    std::size_t n = counts.size();
    t.low[g] = counts[n / 3];
    t.high[g] = counts[2 * n / 3];
    if (!(t.low[g] < t.high[g])) {
      // squeeze apart so the middle band stays non-empty
      t.degenerate = true;
      t.high[g] = t.low[g] + 0.5;
      t.low[g] -= 0.5;
    }
  }
  return t;
}

std::vector<Prototype> prototypes(const std::vector<FeatVec>& featurized) {
  std::map<std::array<int, 3>, std::pair<double, double>> acc;  // values -> (count0, count1)
  for (const auto& f : featurized) {
    auto& entry = acc[f.values];
    if (f.label == 0) {
      entry.first += 1.0;
    } else {
      entry.second += 1.0;
    }
  }
  std::vector<Prototype> out;
  out.reserve(acc.size());
  for (const auto& [values, counts] : acc) {
    Prototype p;
    p.values = values;
    p.weight = counts.first + counts.second;
    p.label = counts.second > counts.first ? 1 : 0;  // ties -> 0
    out.push_back(p);
  }
  return out;
}

std::vector<qcbo::Sample> to_samples(const std::vector<Prototype>& prototypes) {
  std::vector<qcbo::Sample> out;
  out.reserve(prototypes.size());
  for (const auto& p : prototypes) {
    qcbo::Sample s;
    s.features = {static_cast<double>(p.values[0]), static_cast<double>(p.values[1]),
                  static_cast<double>(p.values[2])};
    s.label = p.label;
    s.weight = p.weight;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<qcbo::Sample> to_samples(const std::vector<FeatVec>& featurized) {
  std::vector<qcbo::Sample> out;
  out.reserve(featurized.size());
  for (const auto& f : featurized) {
    qcbo::Sample s;
    s.features = {static_cast<double>(f.values[0]), static_cast<double>(f.values[1]),
                  static_cast<double>(f.values[2])};
    s.label = f.label;
    s.weight = 1.0;
    out.push_back(std::move(s));
  }
  return out;
}

void write_feature_csv(const std::vector<qcbo::Sample>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  out << "f1,f2,f3,label,weight\n";
  char buf[160];
  for (const auto& s : samples) {
    if (s.features.size() != 3) {
      throw std::invalid_argument("feature CSV expects 3 components");
    }
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d,%.17g\n", s.features[0], s.features[1],
                  s.features[2], s.label, s.weight);
    out << buf;
  }
}

std::vector<qcbo::Sample> read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line.rfind("f1,f2,f3", 0) != 0) {
    throw std::runtime_error("bad feature CSV header in " + path);
  }
  std::vector<qcbo::Sample> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    qcbo::Sample s;
    s.features.resize(3);
    int label = 0;
    double weight = 1.0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%d,%lf", &s.features[0], &s.features[1],
                    &s.features[2], &label, &weight) != 5) {
      throw std::runtime_error("bad feature CSV row: " + line);
    }
    s.label = label;
    s.weight = weight;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace qubonn::dataio

namespace qubonn {

std::string fnv1a_file_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  uint64_t h = fnv1a(bytes.data(), bytes.size());
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qubonn
