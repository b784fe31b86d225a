#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <utility>

#include "embisim/common.hpp"
#include "embisim/machine.hpp"

namespace embisim {

// =============================================================================
// BlockIo: one file on the block device, addressed in whole blocks.
//
// Layout: a fixed 64-byte header region, then data cells packed in blocks of
// config().block_size_bytes. Keeping the header out of block 0 means every
// data block holds the same whole number of records regardless of block size.
//
// Every transfer is counted in the owning Workspace's IoStats. A short final
// block costs one transfer, like a full one.
// =============================================================================

class BlockIo {
 public:
  static constexpr std::size_t header_bytes = 64;

  BlockIo() = default;

  BlockIo(BlockIo&& o) noexcept { *this = std::move(o); }

  BlockIo& operator=(BlockIo&& o) noexcept {
    if (this != &o) {
      close();
      file_ = std::exchange(o.file_, nullptr);
      ws_ = std::exchange(o.ws_, nullptr);
      path_ = std::move(o.path_);
      block_ = o.block_;
      data_bytes_ = o.data_bytes_;
      data_offset_ = o.data_offset_;
    }
    return *this;
  }

  BlockIo(const BlockIo&) = delete;
  BlockIo& operator=(const BlockIo&) = delete;

  ~BlockIo() { close(); }

  static BlockIo create(Workspace& ws, const std::filesystem::path& path) {
    BlockIo io;
    io.file_ = std::fopen(path.string().c_str(), "wb+");
    if (!io.file_) throw IoError("cannot create " + path.string());
    io.ws_ = &ws;
    io.path_ = path;
    io.block_ = ws.config().block_size_bytes;
    io.data_bytes_ = 0;
    return io;
  }

  static BlockIo open(Workspace& ws, const std::filesystem::path& path) {
    BlockIo io;
    io.file_ = std::fopen(path.string().c_str(), "rb+");
    if (!io.file_) io.file_ = std::fopen(path.string().c_str(), "rb");
    if (!io.file_) throw IoError("cannot open " + path.string());
    io.ws_ = &ws;
    io.path_ = path;
    io.block_ = ws.config().block_size_bytes;
    if (::fseeko(io.file_, 0, SEEK_END) != 0)
      throw IoError("cannot size " + path.string());
    const auto end = ::ftello(io.file_);
    io.data_bytes_ = end > static_cast<off_t>(header_bytes)
                         ? static_cast<std::uint64_t>(end) - header_bytes
                         : 0;
    return io;
  }

  /// Opens a plain (headerless) file, e.g. a text document, for counted
  /// block-at-a-time reads.
  static BlockIo open_raw(Workspace& ws, const std::filesystem::path& path) {
    BlockIo io;
    io.file_ = std::fopen(path.string().c_str(), "rb");
    if (!io.file_) throw IoError("cannot open " + path.string());
    io.ws_ = &ws;
    io.path_ = path;
    io.block_ = ws.config().block_size_bytes;
    io.data_offset_ = 0;
    if (::fseeko(io.file_, 0, SEEK_END) != 0)
      throw IoError("cannot size " + path.string());
    io.data_bytes_ = static_cast<std::uint64_t>(::ftello(io.file_));
    return io;
  }

  bool is_open() const { return file_ != nullptr; }
  const std::filesystem::path& path() const { return path_; }
  std::size_t block_size() const { return block_; }
  std::uint64_t data_bytes() const { return data_bytes_; }

  std::uint64_t block_count() const {
    return (data_bytes_ + block_ - 1) / block_;
  }

  void read_header(std::byte* out, std::size_t n) {
    if (data_offset_ == 0) throw InvariantError("raw file has no header region");
    seek(0);
    if (n > 0 && std::fread(out, 1, n, file_) != n)
      throw IoError("short header read on " + path_.string());
    ws_->stats().reads += 1;
    ws_->stats().bytes_read += header_bytes;
  }

  void write_header(const std::byte* data, std::size_t n) {
    if (data_offset_ == 0) throw InvariantError("raw file has no header region");
    seek(0);
    if (n > 0 && std::fwrite(data, 1, n, file_) != n)
      throw IoError("header write failed on " + path_.string());
    ws_->stats().writes += 1;
    ws_->stats().bytes_written += header_bytes;
  }

  /// Reads block `index`; returns the byte count (0 when past the end, the
  /// block size except possibly for the last block).
  std::size_t read_block(std::uint64_t index, std::byte* out) {
    const std::uint64_t offset = index * block_;
    if (offset >= data_bytes_) return 0;
    const std::size_t want = static_cast<std::size_t>(
        data_bytes_ - offset < block_ ? data_bytes_ - offset : block_);
    seek(data_offset_ + offset);
    if (std::fread(out, 1, want, file_) != want)
      throw IoError("short block read on " + path_.string());
    ws_->stats().reads += 1;
    ws_->stats().bytes_read += want;
    return want;
  }

  /// Writes `n <= block_size()` bytes as block `index`. A short block is only
  /// valid at the end of the file.
  void write_block(std::uint64_t index, const std::byte* data, std::size_t n) {
    if (n == 0) return;
    if (n > block_) throw InvariantError("oversized block write");
    const std::uint64_t offset = index * block_;
    seek(data_offset_ + offset);
    if (std::fwrite(data, 1, n, file_) != n)
      throw IoError("block write failed on " + path_.string());
    if (offset + n > data_bytes_) data_bytes_ = offset + n;
    ws_->stats().writes += 1;
    ws_->stats().bytes_written += n;
  }

  void flush() {
    if (file_ && std::fflush(file_) != 0)
      throw IoError("flush failed on " + path_.string());
  }

  void close() {
    if (file_) {
      std::fclose(file_);
      file_ = nullptr;
    }
  }

  /// Close and delete the underlying file.
  void remove() {
    close();
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

 private:
  void seek(std::uint64_t offset) {
    if (::fseeko(file_, static_cast<off_t>(offset), SEEK_SET) != 0)
      throw IoError("seek failed on " + path_.string());
  }

  std::FILE* file_ = nullptr;
  Workspace* ws_ = nullptr;
  std::filesystem::path path_;
  std::size_t block_ = 0;
  std::uint64_t data_bytes_ = 0;
  std::uint64_t data_offset_ = header_bytes;
};

}  // namespace embisim
