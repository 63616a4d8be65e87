#include "bevgrid/pointcloud_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <string>

namespace bevgrid {
namespace {

void put_u32(char* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
}

void put_u64(char* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
}

std::uint32_t get_u32(const char* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(in[i])} << (8 * i);
  return v;
}

std::uint64_t get_u64(const char* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(in[i])} << (8 * i);
  return v;
}

std::string where(const std::filesystem::path& path) { return "'" + path.string() + "'"; }

}  // namespace

PointReader::PointReader(const std::filesystem::path& path) : path_(path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error("point file not found: " + where(path));
  }
  const std::uintmax_t file_size = std::filesystem::file_size(path, ec);
  if (ec) throw Error("cannot stat point file " + where(path) + ": " + ec.message());

  in_.open(path, std::ios::binary);
  if (!in_) throw Error("cannot open point file " + where(path));

  std::array<char, kPointHeaderBytes> header{};
  if (file_size < kPointHeaderBytes || !in_.read(header.data(), header.size())) {
    throw Error("malformed header in " + where(path) + ": file is shorter than 16 bytes");
  }
  if (std::memcmp(header.data(), "BEVP", 4) != 0) {
    throw Error("malformed header in " + where(path) + ": bad magic, expected \"BEVP\"");
  }
  const std::uint32_t version = get_u32(header.data() + 4);
  if (version != kPointFormatVersion) {
    throw Error("malformed header in " + where(path) + ": unsupported version " +
                std::to_string(version));
  }
  count_ = get_u64(header.data() + 8);

  const std::uintmax_t payload = file_size - kPointHeaderBytes;
  const std::uintmax_t whole_records = payload / kPointRecordBytes;
  if (payload % kPointRecordBytes != 0) {
    const std::uintmax_t offset = kPointHeaderBytes + whole_records * kPointRecordBytes;
    throw Error("truncated record in " + where(path) + " at byte offset " +
                std::to_string(offset) + " (record " + std::to_string(whole_records) + ", " +
                std::to_string(payload % kPointRecordBytes) + " of 28 bytes present)");
  }
  if (whole_records != count_) {
    throw Error("point count mismatch in " + where(path) + ": header declares " +
                std::to_string(count_) + " points, file holds " + std::to_string(whole_records));
  }
}

std::vector<Point> PointReader::next_batch(std::size_t chunk_size) {
  if (chunk_size == 0) throw Error("chunk size must be positive");
  const std::uint64_t n = std::min<std::uint64_t>(chunk_size, count_ - read_);
  std::vector<Point> batch;
  if (n == 0) return batch;

  std::vector<char> buffer(static_cast<std::size_t>(n) * kPointRecordBytes);
  if (!in_.read(buffer.data(), static_cast<std::streamsize>(buffer.size()))) {
    const auto offset = kPointHeaderBytes + read_ * kPointRecordBytes +
                        static_cast<std::uint64_t>(std::max<std::streamsize>(in_.gcount(), 0));
    throw Error("truncated record in " + where(path_) + " at byte offset " +
                std::to_string(offset));
  }

  batch.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const char* rec = buffer.data() + i * kPointRecordBytes;
    Point& p = batch[i];
    p.x = std::bit_cast<double>(get_u64(rec));
    p.y = std::bit_cast<double>(get_u64(rec + 8));
    p.z = std::bit_cast<double>(get_u64(rec + 16));
    p.r = static_cast<std::uint8_t>(rec[24]);
    p.g = static_cast<std::uint8_t>(rec[25]);
    p.b = static_cast<std::uint8_t>(rec[26]);
    p.label = static_cast<ClassId>(rec[27]);
    p.index = read_ + i;
    if (!is_valid_label(p.label)) {
      throw Error("invalid label " + std::to_string(p.label) + " in " + where(path_) +
                  " at byte offset " +
                  std::to_string(kPointHeaderBytes + p.index * kPointRecordBytes + 27));
    }
  }
  read_ += n;
  return batch;
}

void for_each_batch(const std::filesystem::path& path, std::size_t chunk_size,
                    const std::function<void(std::span<const Point>)>& fn) {
  PointReader reader(path);
  while (!reader.done()) {
    const auto batch = reader.next_batch(chunk_size);
    fn(batch);
  }
}

std::vector<Point> read_points(const std::filesystem::path& path) {
  PointReader reader(path);
  return reader.next_batch(static_cast<std::size_t>(std::max<std::uint64_t>(reader.size(), 1)));
}

void write_points(const std::filesystem::path& path, std::span<const Point> points) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write point file '" + path.string() + "'");

  std::array<char, kPointHeaderBytes> header{};
  std::memcpy(header.data(), "BEVP", 4);
  put_u32(header.data() + 4, kPointFormatVersion);
  put_u64(header.data() + 8, points.size());
  out.write(header.data(), header.size());

  constexpr std::size_t kRecordsPerFlush = 4096;
  std::vector<char> buffer;
  buffer.reserve(kRecordsPerFlush * kPointRecordBytes);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    char rec[kPointRecordBytes];
    put_u64(rec, std::bit_cast<std::uint64_t>(p.x));
    put_u64(rec + 8, std::bit_cast<std::uint64_t>(p.y));
    put_u64(rec + 16, std::bit_cast<std::uint64_t>(p.z));
    rec[24] = static_cast<char>(p.r);
    rec[25] = static_cast<char>(p.g);
    rec[26] = static_cast<char>(p.b);
    rec[27] = static_cast<char>(p.label);
    buffer.insert(buffer.end(), rec, rec + kPointRecordBytes);
    if (buffer.size() >= kRecordsPerFlush * kPointRecordBytes) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out) throw Error("failed writing point file '" + path.string() + "'");
}

void write_labels(const std::filesystem::path& path, std::span<const ClassId> labels,
                  std::uint64_t expected_count) {
  if (labels.size() != expected_count) {
    throw Error("label count mismatch: " + std::to_string(labels.size()) +
                " labels for a cloud of " + std::to_string(expected_count) + " points");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write label file '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
  if (!out) throw Error("failed writing label file '" + path.string() + "'");
}

std::vector<ClassId> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open label file '" + path.string() + "'");
  std::vector<ClassId> labels(std::filesystem::file_size(path));
  in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  if (!in) throw Error("failed reading label file '" + path.string() + "'");
  return labels;
}

std::vector<ClassId> labels_of(std::span<const Point> points) {
  std::vector<ClassId> labels(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) labels[i] = points[i].label;
  return labels;
}

}  // namespace bevgrid
