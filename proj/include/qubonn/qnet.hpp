#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qubonn/pwl.hpp"
#include "qubonn/qcbo.hpp"

namespace qubonn::qnet {

/// Decoded, runnable quantized network: integer weights/biases per layer and
/// a piecewise activation shared by every layer.
struct QuantNet {
  std::vector<int> dims;
  std::vector<std::vector<std::vector<int>>> weights;  // [layer][out][in]
  std::vector<std::vector<int>> biases;                // [layer][out]
  pwl::PiecewiseFn activation;
  int bits_per_weight = 1;
  int bits_per_bias = 1;

  QuantNet(std::vector<int> dims_, pwl::PiecewiseFn activation_)
      : dims(std::move(dims_)), activation(std::move(activation_)) {}

  int parameter_count() const;

  std::string to_json() const;
  static QuantNet from_json(const std::string& text);
};

/// Reconstructs weight/bias integers from their bit groups in a solved
/// assignment; beta/activation/auxiliary bits are ignored.
QuantNet decode(const std::vector<uint8_t>& solution, const qcbo::QcboModel& model,
                const qcbo::NetSpec& spec);

/// Layered affine + piecewise activation; returns the raw final activation
/// value (thresholding is the caller's job). Throws when a pre-activation
/// leaves the activation domain, naming layer and neuron.
double forward(const QuantNet& net, const std::vector<double>& x);

struct LabeledVec {
  std::vector<double> features;
  int label = 0;
  double weight = 1.0;
};

/// Weighted fraction of samples with (forward >= threshold) == label.
double accuracy(const QuantNet& net, const std::vector<LabeledVec>& dataset, double threshold);

struct ResourceReport {
  double bytes = 0.0;        // total parameter bits / 8
  int64_t total_bits = 0;
  int64_t mac_ops = 0;       // multiply-accumulates per forward pass
  int64_t lookup_ops = 0;    // activation interval lookups per forward pass
  double median_latency_us = 0.0;
  int latency_samples = 0;
};

ResourceReport resource_report(const QuantNet& net, int latency_passes = 10000);
std::string resource_report_json(const ResourceReport& r);

struct TrainConfig {
  double lr = 0.1;
  int epochs = 500;
  double step = 1.0;     // quantizer scale s
  double qmin = -1.0;
  double qmax = 1.0;
  double momentum = 0.9;
  uint64_t seed = 1;
};

/// STE quantizer: s * clamp(round(x/s), qmin/s, qmax/s), round half away
/// from zero.
double ste_quantize(double x, double step, double qmin, double qmax);

/// Quantization-aware gradient descent with identity gradient through the
/// quantizer; squared loss on the raw output. Returns the quantized snapshot
/// with the best accuracy seen on `data`.
QuantNet ste_train(const qcbo::NetSpec& spec, const std::vector<LabeledVec>& data,
                   const TrainConfig& config);

/// BinaryConnect: forward/backward with sign(w) (sign(0) = +1), gradient
/// accumulated in real-valued weights.
QuantNet binaryconnect_train(const qcbo::NetSpec& spec, const std::vector<LabeledVec>& data,
                             const TrainConfig& config);

}  // namespace qubonn::qnet
