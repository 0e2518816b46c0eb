#pragma once

#include <cstdint>
#include <string>

namespace qubonn {

// splitmix64; used everywhere a seed has to be derived from another seed so
// that all randomness in a run flows from one root value.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform double in [0,1) from a raw 64-bit draw.
inline double uniform01(uint64_t raw) {
  return static_cast<double>(raw >> 11) * 0x1.0p-53;
}

// FNV-1a over a byte buffer; manifests store this as a provenance hash.
inline uint64_t fnv1a(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a_file_hex(const std::string& path);

}  // namespace qubonn
