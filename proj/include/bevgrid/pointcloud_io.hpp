#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <vector>

#include "bevgrid/point.hpp"

namespace bevgrid {

// Point file layout (little-endian):
//   "BEVP" | u32 version | u64 count | count x {f64 x, f64 y, f64 z, u8 r, u8 g, u8 b, u8 label}
inline constexpr std::uint32_t kPointFormatVersion = 1;
inline constexpr std::size_t kPointHeaderBytes = 16;
inline constexpr std::size_t kPointRecordBytes = 28;

/// Sequential reader over a point file. Holds at most one batch in memory.
///
/// Header and file size are checked on open: a file that ends mid-record is
/// reported with the byte offset of the incomplete record, and a file whose
/// record count disagrees with the header is rejected before any batch is read.
class PointReader {
 public:
  explicit PointReader(const std::filesystem::path& path);

  std::uint64_t size() const { return count_; }
  std::uint64_t consumed() const { return read_; }
  bool done() const { return read_ == count_; }

  /// Next batch of up to `chunk_size` points; empty once the file is exhausted.
  std::vector<Point> next_batch(std::size_t chunk_size);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t count_ = 0;
  std::uint64_t read_ = 0;
};

/// Streams every batch of the file through `fn`, in file order.
void for_each_batch(const std::filesystem::path& path, std::size_t chunk_size,
                    const std::function<void(std::span<const Point>)>& fn);

std::vector<Point> read_points(const std::filesystem::path& path);

/// Writes points in span order. Indices are not stored; they are implied by order.
void write_points(const std::filesystem::path& path, std::span<const Point> points);

/// Writes one byte per point. `expected_count` is the point count of the source
/// cloud; a mismatch is reported before the file is touched.
void write_labels(const std::filesystem::path& path, std::span<const ClassId> labels,
                  std::uint64_t expected_count);
std::vector<ClassId> read_labels(const std::filesystem::path& path);

std::vector<ClassId> labels_of(std::span<const Point> points);

}  // namespace bevgrid
