#pragma once

// Versioned little-endian binary dump of a preprocessing result (signature
// pool, per-box assignments, populated value-table entries) so the CLI can
// reuse preprocessing across runs on the same input.
//
// Layout (all integers little-endian):
//   u32 magic 'WBSG' (0x47534257), u32 version
//   u8 arith tag, u8 ged flag, u8 metric kind, u8 dimension
//   u32 g, u32 box rows, u32 box cols, u32 n, u32 m
//   scalar rho (GED only, encoded per arith mode)
//   u64 content hash of both sequences
//   u32 sigma count, then per sigma: g*g codes
//   u32 pool count, then per signature: u32 sigma'd codes... (codes g*g, u32
//       path count, u64 words)
//   u32*rows*cols box_sig, u32*rows*cols box_sigma
//   u64 table entry count, then per entry: u64, u64, scalar

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "warpbox/preprocess.hpp"

namespace warpbox {

namespace detail {

inline constexpr std::uint32_t kCacheMagic = 0x47534257;  // "WBSG"
inline constexpr std::uint32_t kCacheVersion = 1;

template <class S>
struct ArithTag;
template <>
struct ArithTag<std::int64_t> {
  static constexpr std::uint8_t value = 0;
};
template <>
struct ArithTag<Rational> {
  static constexpr std::uint8_t value = 1;
};
template <>
struct ArithTag<double> {
  static constexpr std::uint8_t value = 2;
};

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_scalar(std::ostream& os, std::int64_t v) {
  put_u64(os, static_cast<std::uint64_t>(v));
}
inline void put_scalar(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}
inline void put_scalar(std::ostream& os, const Rational& v) {
  std::string s = v.str();
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class S>
void get_scalar(std::istream& is, S& out);
template <>
inline void get_scalar(std::istream& is, std::int64_t& out) {
  out = static_cast<std::int64_t>(get_u64(is));
}
template <>
inline void get_scalar(std::istream& is, double& out) {
  std::uint64_t bits = get_u64(is);
  std::memcpy(&out, &bits, 8);
}
template <>
inline void get_scalar(std::istream& is, Rational& out) {
  std::uint32_t len = get_u32(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  out = Rational(s);
}

template <class S>
std::uint64_t content_hash(const PointSeq<S>& a, const PointSeq<S>& b) {
  std::uint64_t h = 1469598103934665603ull;
  auto mixin = [&](const PointSeq<S>& seq) {
    h = mix64(h ^ static_cast<std::uint64_t>(seq.dim));
    h = mix64(h ^ static_cast<std::uint64_t>(seq.flat.size()));
    for (const S& v : seq.flat) {
      for (char c : ScalarTraits<S>::to_string(v)) h = mix64(h ^ static_cast<unsigned char>(c));
    }
  };
  mixin(a);
  mixin(b);
  return h;
}

}  // namespace detail

template <class S>
void save_preprocessed(const std::string& path, const BoxGrid<S>& grid,
                       const GridCostModel<S>& model, const Preprocessed<S>& pre) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot write cache file: " + path);
  detail::put_u32(os, detail::kCacheMagic);
  detail::put_u32(os, detail::kCacheVersion);
  os.put(static_cast<char>(detail::ArithTag<S>::value));
  os.put(model.ged ? 1 : 0);
  os.put(static_cast<char>(model.metric.kind));
  os.put(static_cast<char>(model.metric.dim));
  detail::put_u32(os, static_cast<std::uint32_t>(grid.g));
  detail::put_u32(os, static_cast<std::uint32_t>(grid.rows));
  detail::put_u32(os, static_cast<std::uint32_t>(grid.cols));
  detail::put_u32(os, static_cast<std::uint32_t>(grid.a->size()));
  detail::put_u32(os, static_cast<std::uint32_t>(grid.b->size()));
  if (model.ged) detail::put_scalar(os, model.rho);
  detail::put_u64(os, detail::content_hash(*grid.a, *grid.b));

  detail::put_u32(os, static_cast<std::uint32_t>(pre.tables->sigma_count()));
  for (std::uint32_t id = 0; id < pre.tables->sigma_count(); ++id) {
    const SignAssignment& sa = pre.tables->sigma(id);
    os.write(reinterpret_cast<const char*>(sa.codes.data()),
             static_cast<std::streamsize>(sa.codes.size()));
  }
  detail::put_u32(os, static_cast<std::uint32_t>(pre.pool.size()));
  for (const BoxSignature& sig : pre.pool) {
    os.write(reinterpret_cast<const char*>(sig.sigma.codes.data()),
             static_cast<std::streamsize>(sig.sigma.codes.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(sig.paths.size()));
    for (std::uint64_t w : sig.paths) detail::put_u64(os, w);
  }
  for (std::uint32_t v : pre.box_sig) detail::put_u32(os, v);
  for (std::uint32_t v : pre.box_sigma) detail::put_u32(os, v);

  detail::put_u64(os, pre.tables->entry_count());
  pre.tables->for_each_entry([&](const detail::TableKey& k, const S& v) {
    detail::put_u64(os, k.a);
    detail::put_u64(os, k.b);
    detail::put_scalar(os, v);
  });
  if (!os) throw InputError("failed while writing cache file: " + path);
}

// Loads a cache if it exists and matches the configuration and input;
// returns nullopt when absent or stale.
template <class S>
std::optional<Preprocessed<S>> load_preprocessed(const std::string& path, const BoxGrid<S>& grid,
                                                 const GridCostModel<S>& model) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  if (detail::get_u32(is) != detail::kCacheMagic || detail::get_u32(is) != detail::kCacheVersion)
    return std::nullopt;
  auto u8 = [&]() { return static_cast<std::uint8_t>(is.get()); };
  if (u8() != detail::ArithTag<S>::value) return std::nullopt;
  if ((u8() != 0) != model.ged) return std::nullopt;
  if (u8() != static_cast<std::uint8_t>(model.metric.kind)) return std::nullopt;
  if (u8() != static_cast<std::uint8_t>(model.metric.dim)) return std::nullopt;
  if (detail::get_u32(is) != static_cast<std::uint32_t>(grid.g)) return std::nullopt;
  if (detail::get_u32(is) != static_cast<std::uint32_t>(grid.rows)) return std::nullopt;
  if (detail::get_u32(is) != static_cast<std::uint32_t>(grid.cols)) return std::nullopt;
  if (detail::get_u32(is) != static_cast<std::uint32_t>(grid.a->size())) return std::nullopt;
  if (detail::get_u32(is) != static_cast<std::uint32_t>(grid.b->size())) return std::nullopt;
  if (model.ged) {
    S rho;
    detail::get_scalar(is, rho);
    if (!(rho == model.rho)) return std::nullopt;
  }
  if (detail::get_u64(is) != detail::content_hash(*grid.a, *grid.b)) return std::nullopt;

  Preprocessed<S> pre;
  pre.tables = std::make_shared<ValueTables<S>>(grid, model);
  const std::size_t cells = static_cast<std::size_t>(grid.g) * grid.g;

  std::uint32_t sigma_count = detail::get_u32(is);
  for (std::uint32_t id = 0; id < sigma_count; ++id) {
    SignAssignment sa;
    sa.kind = model.metric.kind;
    sa.dim = model.metric.dim;
    sa.g = grid.g;
    sa.codes.resize(cells);
    is.read(reinterpret_cast<char*>(sa.codes.data()), static_cast<std::streamsize>(cells));
    if (pre.tables->intern_sigma(sa) != id) return std::nullopt;
  }
  std::uint32_t pool_count = detail::get_u32(is);
  pre.pool.resize(pool_count);
  for (BoxSignature& sig : pre.pool) {
    sig.sigma.kind = model.metric.kind;
    sig.sigma.dim = model.metric.dim;
    sig.sigma.g = grid.g;
    sig.sigma.codes.resize(cells);
    is.read(reinterpret_cast<char*>(sig.sigma.codes.data()),
            static_cast<std::streamsize>(cells));
    std::uint32_t n_paths = detail::get_u32(is);
    sig.paths.resize(n_paths);
    for (std::uint64_t& w : sig.paths) w = detail::get_u64(is);
  }
  std::size_t boxes = static_cast<std::size_t>(grid.rows) * grid.cols;
  pre.box_sig.resize(boxes);
  for (std::uint32_t& v : pre.box_sig) v = detail::get_u32(is);
  pre.box_sigma.resize(boxes);
  for (std::uint32_t& v : pre.box_sigma) v = detail::get_u32(is);
  for (std::size_t bi = 0; bi < boxes; ++bi) {
    if (pre.box_sig[bi] >= pre.pool.size() || pre.box_sigma[bi] >= sigma_count)
      return std::nullopt;
    for (std::uint64_t w : pre.pool[pre.box_sig[bi]].paths)
      pre.tables->register_key(pre.box_sigma[bi], w);
  }
  std::uint64_t entries = detail::get_u64(is);
  for (std::uint64_t t = 0; t < entries; ++t) {
    std::uint64_t a = detail::get_u64(is);
    std::uint64_t b = detail::get_u64(is);
    S v;
    detail::get_scalar(is, v);
    pre.tables->insert_raw(a, b, std::move(v));
  }
  if (!is) return std::nullopt;
  return pre;
}

}  // namespace warpbox
