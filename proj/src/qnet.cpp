#include "qubonn/qnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "qubonn/common.hpp"

namespace qubonn::qnet {

int QuantNet::parameter_count() const {
  int count = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    count += dims[l + 1] * dims[l] + dims[l + 1];
  }
  return count;
}

std::string QuantNet::to_json() const {
  nlohmann::json j;
  j["dims"] = dims;
  j["weights"] = weights;
  j["biases"] = biases;
  j["activation"] = nlohmann::json::parse(activation.to_json());
  j["bits_per_weight"] = bits_per_weight;
  j["bits_per_bias"] = bits_per_bias;
  return j.dump(2);
}

QuantNet QuantNet::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  QuantNet net(j.at("dims").get<std::vector<int>>(),
               pwl::PiecewiseFn::from_json(j.at("activation").dump()));
  net.weights = j.at("weights").get<std::vector<std::vector<std::vector<int>>>>();
  net.biases = j.at("biases").get<std::vector<std::vector<int>>>();
  net.bits_per_weight = j.at("bits_per_weight").get<int>();
  net.bits_per_bias = j.at("bits_per_bias").get<int>();
  return net;
}

namespace {

int decode_bits(const std::vector<uint8_t>& bits, qcbo::WeightCode code) {
  if (code == qcbo::WeightCode::PlusMinusOne) {
    return bits.at(0) ? 1 : -1;
  }
  int64_t v = 0;
  for (std::size_t b = 0; b < bits.size(); ++b) {
    if (bits[b]) v += int64_t(1) << b;
  }
  return static_cast<int>(v - (int64_t(1) << (bits.size() - 1)));
}

}  // namespace

QuantNet decode(const std::vector<uint8_t>& solution, const qcbo::QcboModel& model,
                const qcbo::NetSpec& spec) {
  if (static_cast<int>(solution.size()) != model.var_count()) {
    throw std::invalid_argument("solution length does not match the variable registry");
  }
  const int depth = spec.depth();
  const int wb = spec.weight_code == qcbo::WeightCode::PlusMinusOne ? 1 : spec.weight_bits;
  const int bb = spec.bias_code == qcbo::WeightCode::PlusMinusOne ? 1 : spec.bias_bits;

  std::vector<std::vector<std::vector<std::vector<uint8_t>>>> wbits(depth);
  std::vector<std::vector<std::vector<uint8_t>>> bbits(depth);
  for (int l = 0; l < depth; ++l) {
    wbits[l].assign(spec.dims[l + 1],
                    std::vector<std::vector<uint8_t>>(spec.dims[l], std::vector<uint8_t>(wb, 0)));
    bbits[l].assign(spec.dims[l + 1], std::vector<uint8_t>(bb, 0));
  }
  for (int id = 0; id < model.var_count(); ++id) {
    const qcbo::VarInfo& v = model.vars.info(id);
    if (v.tag == qcbo::VarTag::WeightBit) {
      wbits[v.idx[0] - 1][v.idx[1]][v.idx[2]][v.idx[3]] = solution[id];
    } else if (v.tag == qcbo::VarTag::BiasBit) {
      bbits[v.idx[0] - 1][v.idx[1]][v.idx[2]] = solution[id];
    }
  }

  QuantNet net(spec.dims,
               pwl::PiecewiseFn(spec.activation.breakpoints(), spec.coded_activation_values()));
  net.bits_per_weight = wb;
  net.bits_per_bias = bb;
  net.weights.resize(depth);
  net.biases.resize(depth);
  for (int l = 0; l < depth; ++l) {
    net.weights[l].assign(spec.dims[l + 1], std::vector<int>(spec.dims[l], 0));
    net.biases[l].assign(spec.dims[l + 1], 0);
    for (int j = 0; j < spec.dims[l + 1]; ++j) {
      for (int k = 0; k < spec.dims[l]; ++k) {
        net.weights[l][j][k] = decode_bits(wbits[l][j][k], spec.weight_code);
      }
      net.biases[l][j] = decode_bits(bbits[l][j], spec.bias_code);
    }
  }
  return net;
}

double forward(const QuantNet& net, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != net.dims.front()) {
    throw std::invalid_argument("input dimension mismatch");
  }
  std::vector<double> act = x;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    std::vector<double> next(net.dims[l + 1]);
    for (int j = 0; j < net.dims[l + 1]; ++j) {
      double h = net.biases[l][j];
      for (int k = 0; k < net.dims[l]; ++k) {
        h += static_cast<double>(net.weights[l][j][k]) * act[k];
      }
      try {
        next[j] = net.activation.eval(h);
      } catch (const std::out_of_range&) {
        std::ostringstream msg;
        msg << "pre-activation " << h << " out of range at layer " << (l + 1) << ", neuron " << j;
        throw std::out_of_range(msg.str());
      }
    }
    act = std::move(next);
  }
  return act.at(0);
}

double accuracy(const QuantNet& net, const std::vector<LabeledVec>& dataset, double threshold) {
  if (dataset.empty()) {
    throw std::invalid_argument("accuracy needs a non-empty dataset");
  }
  double correct = 0.0, total = 0.0;
  for (const auto& s : dataset) {
    int predicted = forward(net, s.features) >= threshold ? 1 : 0;
    if (predicted == s.label) correct += s.weight;
    total += s.weight;
  }
  return correct / total;
}

ResourceReport resource_report(const QuantNet& net, int latency_passes) {
  ResourceReport r;
  int64_t weight_params = 0, bias_params = 0;
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    weight_params += int64_t(net.dims[l + 1]) * net.dims[l];
    bias_params += net.dims[l + 1];
    r.mac_ops += int64_t(net.dims[l + 1]) * (net.dims[l] + 1);
    r.lookup_ops += net.dims[l + 1];
  }
  r.total_bits = weight_params * net.bits_per_weight + bias_params * net.bits_per_bias;
  r.bytes = static_cast<double>(r.total_bits) / 8.0;  // eighths are exact in binary

  if (latency_passes > 0) {
    std::vector<double> input(net.dims.front(), 0.0);
    volatile double sink = 0.0;
    // timed in chunks so clock granularity does not swamp tiny nets
    const int chunk = 100;
    std::vector<double> per_pass;
    int done = 0;
    while (done < latency_passes) {
      int batch = std::min(chunk, latency_passes - done);
      auto t0 = std::chrono::steady_clock::now();
      for (int i = 0; i < batch; ++i) sink = sink + forward(net, input);
      auto t1 = std::chrono::steady_clock::now();
      double us = std::chrono::duration<double, std::micro>(t1 - t0).count() / batch;
      per_pass.push_back(us);
      done += batch;
    }
    std::sort(per_pass.begin(), per_pass.end());
    r.median_latency_us = per_pass[per_pass.size() / 2];
    r.latency_samples = latency_passes;
  }
  return r;
}

std::string resource_report_json(const ResourceReport& r) {
  nlohmann::json j;
  j["bytes"] = r.bytes;
  j["total_bits"] = r.total_bits;
  j["mac_ops"] = r.mac_ops;
  j["lookup_ops"] = r.lookup_ops;
  j["latency"] = {{"median_us", r.median_latency_us},
                  {"passes", r.latency_samples},
                  {"deterministic", false}};
  return j.dump(2);
}

double ste_quantize(double x, double step, double qmin, double qmax) {
  if (!(step > 0.0) || !(qmin < qmax)) {
    throw std::invalid_argument("bad quantizer configuration");
  }
  double code = std::round(x / step);
  code = std::clamp(code, qmin / step, qmax / step);
  return step * code;
}

namespace {

struct Shadow {
  std::vector<std::vector<std::vector<double>>> w;
  std::vector<std::vector<double>> b;
};

Shadow init_shadow(const qcbo::NetSpec& spec, uint64_t seed) {
  std::mt19937_64 rng(seed);
  // wide enough that a fair share of weights quantize away from zero at epoch 0
  auto u = [&rng]() { return 2.0 * uniform01(rng()) - 1.0; };
  Shadow s;
  int depth = spec.depth();
  s.w.resize(depth);
  s.b.resize(depth);
  for (int l = 0; l < depth; ++l) {
    s.w[l].assign(spec.dims[l + 1], std::vector<double>(spec.dims[l], 0.0));
    s.b[l].assign(spec.dims[l + 1], 0.0);
    for (auto& row : s.w[l]) {
      for (auto& v : row) v = u();
    }
    for (auto& v : s.b[l]) v = u();
  }
  return s;
}

enum class Quantizer { Ste, Sign };

double apply_quantizer(double v, Quantizer q, const TrainConfig& cfg) {
  if (q == Quantizer::Sign) {
    return v >= 0.0 ? 1.0 : -1.0;  // sign(0) = +1
  }
  return ste_quantize(v, cfg.step, cfg.qmin, cfg.qmax);
}

// BinaryConnect binarizes weights only; biases stay real during training and
// are rounded to the nearest clamped integer for the deployed snapshot.
double quantize_bias(double v, Quantizer q, const TrainConfig& cfg) {
  if (q == Quantizer::Sign) {
    return std::clamp(std::round(v), cfg.qmin, cfg.qmax);
  }
  return ste_quantize(v, cfg.step, cfg.qmin, cfg.qmax);
}

QuantNet snapshot(const qcbo::NetSpec& spec, const Shadow& shadow, Quantizer q,
                  const TrainConfig& cfg) {
  if (cfg.step != 1.0) {
    throw std::invalid_argument("quantized snapshot needs unit quantizer step");
  }
  QuantNet net(spec.dims,
               pwl::PiecewiseFn(spec.activation.breakpoints(), spec.coded_activation_values()));
  net.bits_per_weight = spec.weight_bits;
  net.bits_per_bias = spec.bias_bits;
  int depth = spec.depth();
  net.weights.resize(depth);
  net.biases.resize(depth);
  for (int l = 0; l < depth; ++l) {
    net.weights[l].assign(spec.dims[l + 1], std::vector<int>(spec.dims[l], 0));
    net.biases[l].assign(spec.dims[l + 1], 0);
    for (int j = 0; j < spec.dims[l + 1]; ++j) {
      for (int k = 0; k < spec.dims[l]; ++k) {
        net.weights[l][j][k] = static_cast<int>(apply_quantizer(shadow.w[l][j][k], q, cfg));
      }
      net.biases[l][j] = static_cast<int>(quantize_bias(shadow.b[l][j], q, cfg));
    }
  }
  return net;
}

QuantNet train_quantized(const qcbo::NetSpec& spec, const std::vector<LabeledVec>& data,
                         const TrainConfig& cfg, Quantizer quantizer) {
  spec.validate();
  if (data.empty()) {
    throw std::invalid_argument("training needs a non-empty dataset");
  }
  const int depth = spec.depth();
  Shadow shadow = init_shadow(spec, cfg.seed);
  Shadow velocity = shadow;
  for (int l = 0; l < depth; ++l) {
    for (auto& row : velocity.w[l]) std::fill(row.begin(), row.end(), 0.0);
    std::fill(velocity.b[l].begin(), velocity.b[l].end(), 0.0);
  }

  double total_weight = 0.0;
  for (const auto& s : data) total_weight += s.weight;
  const double mean_weight = total_weight / static_cast<double>(data.size());

  auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };

  QuantNet best = snapshot(spec, shadow, quantizer, cfg);
  double best_acc = accuracy(best, data, 0.5);

  std::mt19937_64 order_rng(mix_seed(cfg.seed, 0x5u));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[order_rng() % i]);
    }

    double loss = 0.0;
    for (std::size_t idx : order) {
      const LabeledVec& sample = data[idx];
      // quantized parameters for this step's forward/backward
      Shadow q = shadow;
      for (int l = 0; l < depth; ++l) {
        for (int j = 0; j < spec.dims[l + 1]; ++j) {
          for (int k = 0; k < spec.dims[l]; ++k) {
            q.w[l][j][k] = apply_quantizer(shadow.w[l][j][k], quantizer, cfg);
          }
          q.b[l][j] = quantizer == Quantizer::Sign
                          ? shadow.b[l][j]  // real bias during training
                          : ste_quantize(shadow.b[l][j], cfg.step, cfg.qmin, cfg.qmax);
        }
      }

      // forward with smooth sigmoid, quantized parameters
      std::vector<std::vector<double>> acts(depth + 1);
      acts[0] = sample.features;
      for (int l = 0; l < depth; ++l) {
        acts[l + 1].resize(spec.dims[l + 1]);
        for (int j = 0; j < spec.dims[l + 1]; ++j) {
          double h = q.b[l][j];
          for (int k = 0; k < spec.dims[l]; ++k) h += q.w[l][j][k] * acts[l][k];
          acts[l + 1][j] = sigmoid(h);
        }
      }
      double out = acts[depth][0];
      double err = out - sample.label;
      double sw = sample.weight / mean_weight;
      loss += (sample.weight / total_weight) * err * err;

      // backward SGD step with momentum; identity gradient through the quantizer
      std::vector<double> delta(1, 2.0 * err * out * (1.0 - out) * sw);
      for (int l = depth - 1; l >= 0; --l) {
        std::vector<double> prev_delta(spec.dims[l], 0.0);
        for (int j = 0; j < spec.dims[l + 1]; ++j) {
          velocity.b[l][j] = cfg.momentum * velocity.b[l][j] - cfg.lr * delta[j];
          shadow.b[l][j] = std::clamp(shadow.b[l][j] + velocity.b[l][j], cfg.qmin - 0.5,
                                      cfg.qmax + 0.5);
          for (int k = 0; k < spec.dims[l]; ++k) {
            prev_delta[k] += delta[j] * q.w[l][j][k];
            velocity.w[l][j][k] = cfg.momentum * velocity.w[l][j][k] - cfg.lr * delta[j] * acts[l][k];
            shadow.w[l][j][k] = std::clamp(shadow.w[l][j][k] + velocity.w[l][j][k], cfg.qmin,
                                           cfg.qmax);
          }
        }
        if (l > 0) {
          for (int k = 0; k < spec.dims[l]; ++k) {
            prev_delta[k] *= acts[l][k] * (1.0 - acts[l][k]);
          }
        }
        delta = std::move(prev_delta);
      }
    }
    if (!std::isfinite(loss)) {
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    }

    QuantNet snap = snapshot(spec, shadow, quantizer, cfg);
    double acc = accuracy(snap, data, 0.5);
    if (acc > best_acc) {
      best_acc = acc;
      best = std::move(snap);
    }
  }
  return best;
}

}  // namespace

QuantNet ste_train(const qcbo::NetSpec& spec, const std::vector<LabeledVec>& data,
                   const TrainConfig& config) {
  return train_quantized(spec, data, config, Quantizer::Ste);
}

QuantNet binaryconnect_train(const qcbo::NetSpec& spec, const std::vector<LabeledVec>& data,
                             const TrainConfig& config) {
  return train_quantized(spec, data, config, Quantizer::Sign);
}

}  // namespace qubonn::qnet
