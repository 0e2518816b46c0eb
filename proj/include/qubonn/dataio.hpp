#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qubonn/qcbo.hpp"

namespace qubonn::dataio {

constexpr int kImageRows = 28;
constexpr int kImageCols = 28;
constexpr int kImageBytes = kImageRows * kImageCols;

struct RawImage {
  std::array<uint8_t, kImageBytes> pixels{};
  uint8_t label = 0;
};

/// Parses the IDX pair (big-endian headers, magic 0x803 for images and 0x801
/// for labels); .gz inputs are decompressed transparently.
std::vector<RawImage> load_idx(const std::string& images_path, const std::string& labels_path);

/// Serializes images back to the IDX pair byte layout (round-trip helper).
void write_idx(const std::vector<RawImage>& images, const std::string& images_path,
               const std::string& labels_path);

struct BinaryImage {
  std::array<uint8_t, kImageBytes> pixels{};
  int label = 0;  // first kept class -> 0, second -> 1
};

/// Keeps the two listed classes, mapping the first to label 0 and the second
/// to label 1.
std::vector<BinaryImage> filter_classes(const std::vector<RawImage>& images,
                                        const std::vector<int>& keep);

struct FeatVec {
  std::array<int, 3> values{};  // each in {-1, 0, 1}
  int label = 0;
};

struct Thresholds {
  std::array<double, 3> low{};
  std::array<double, 3> high{};
  bool degenerate = false;
};

/// Zero-pixel counts per column group (columns 0-8, 9-17, 18-27).
std::array<int, 3> zero_counts(const BinaryImage& img);

/// Component g = -1 if count < low_g, 0 if low_g <= count < high_g, else +1.
FeatVec featurize(const BinaryImage& img, const Thresholds& thresholds);

/// Per-group tertiles of the zero-count distribution over the training
/// subset (nearest-rank). Degenerate distributions collapse to count +- 0.5.
Thresholds fit_thresholds(const std::vector<BinaryImage>& train);

struct Prototype {
  std::array<int, 3> values{};
  int label = 0;       // majority label, ties -> 0
  double weight = 0.0; // sample count
};

/// Collapses identical feature vectors; at most 3^3 = 27 prototypes.
std::vector<Prototype> prototypes(const std::vector<FeatVec>& featurized);

std::vector<qcbo::Sample> to_samples(const std::vector<Prototype>& prototypes);
std::vector<qcbo::Sample> to_samples(const std::vector<FeatVec>& featurized);

/// CSV with header f1,f2,f3,label,weight.
void write_feature_csv(const std::vector<qcbo::Sample>& samples, const std::string& path);
std::vector<qcbo::Sample> read_feature_csv(const std::string& path);

}  // namespace qubonn::dataio
