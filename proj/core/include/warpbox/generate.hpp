#pragma once

// Seeded random instances for self-tests and benchmarks. Uses its own
// bounded-draw helper so generated instances are identical across standard
// libraries.

#include <cstdint>
#include <random>

#include "warpbox/core.hpp"

namespace warpbox {

struct InstanceParams {
  int max_len = 256;
  long long value_range = 1000000;  // coordinates drawn from [-range, range]
  int dim = 1;
  int min_len = 1;
};

inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;  // slight modulo bias is irrelevant for test instances
}

template <class S>
PointSeq<S> random_sequence(std::mt19937_64& rng, const InstanceParams& p, std::string label) {
  int len = p.min_len + static_cast<int>(bounded(rng, p.max_len - p.min_len + 1));
  std::vector<S> flat;
  flat.reserve(static_cast<std::size_t>(len) * p.dim);
  for (int i = 0; i < len * p.dim; ++i) {
    long long v =
        static_cast<long long>(bounded(rng, 2 * static_cast<std::uint64_t>(p.value_range) + 1)) -
        p.value_range;
    flat.push_back(scalar_from_int<S>(v));
  }
  return PointSeq<S>(p.dim, std::move(flat), std::move(label));
}

template <class S>
std::pair<PointSeq<S>, PointSeq<S>> random_instance(std::mt19937_64& rng,
                                                    const InstanceParams& p) {
  return {random_sequence<S>(rng, p, "A"), random_sequence<S>(rng, p, "B")};
}

}  // namespace warpbox
