#pragma once

// Checkpoint archive: one file holding named float64 arrays and a JSON
// metadata record.
//
//   bytes 0..7    magic "GRAPHAIR"
//   u32           format version (1)
//   u64           metadata length L, then L bytes of UTF-8 JSON
//   u64           array count N, then N records of
//                   u32 name length, name bytes,
//                   i64 rows, i64 cols,
//                   rows*cols float64 values in column-major order
//
// All integers and floats are little-endian.

#include "graphair/common.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace graphair {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char kArchiveMagic[8] = {'G', 'R', 'A', 'P', 'H', 'A', 'I', 'R'};
inline constexpr std::uint32_t kArchiveVersion = 1;

struct Archive {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::pair<std::string, Matrix>> arrays;

  void put(std::string name, Matrix value) { arrays.emplace_back(std::move(name), std::move(value)); }

  const Matrix* find(const std::string& name) const {
    for (const auto& [n, m] : arrays) {
      if (n == name) return &m;
    }
    return nullptr;
  }

  const Matrix& at(const std::string& name) const {
    const Matrix* m = find(name);
    if (m == nullptr) throw DataError("archive has no array named '" + name + "'");
    return *m;
  }
};

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated checkpoint archive");
  return v;
}

}  // namespace detail

/// Writes to `path` via a temporary file and rename.
inline void write_archive(const std::filesystem::path& path, const Archive& archive) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(kArchiveMagic, sizeof(kArchiveMagic));
    detail::write_pod(out, kArchiveVersion);
    const std::string meta = archive.metadata.dump();
    detail::write_pod(out, static_cast<std::uint64_t>(meta.size()));
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    detail::write_pod(out, static_cast<std::uint64_t>(archive.arrays.size()));
    for (const auto& [name, m] : archive.arrays) {
      detail::write_pod(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      detail::write_pod(out, static_cast<std::int64_t>(m.rows()));
      detail::write_pod(out, static_cast<std::int64_t>(m.cols()));
      out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    }
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[sizeof(kArchiveMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kArchiveMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + " is not a checkpoint archive");
  }
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != kArchiveVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  Archive archive;
  const auto meta_len = detail::read_pod<std::uint64_t>(in);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw DataError("truncated checkpoint metadata");
  archive.metadata = nlohmann::json::parse(meta);
  const auto count = detail::read_pod<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = detail::read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = detail::read_pod<std::int64_t>(in);
    const auto cols = detail::read_pod<std::int64_t>(in);
    if (rows < 0 || cols < 0) throw DataError("negative array shape in checkpoint");
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw DataError("truncated array '" + name + "' in checkpoint");
    archive.put(std::move(name), std::move(m));
  }
  return archive;
}

}  // namespace graphair
