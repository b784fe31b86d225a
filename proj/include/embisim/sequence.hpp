#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "embisim/block_io.hpp"
#include "embisim/common.hpp"
#include "embisim/machine.hpp"

namespace embisim {

// =============================================================================
// RawSequence: a sequence of fixed-width records stored in a block file.
//
// Header (64-byte region): 5-byte magic, 3 zero bytes, u64 record count,
// u32 record width, rest reserved. Records are packed contiguously after the
// header, so a block holds exactly block_size / width records; the width must
// divide the block size, which is enforced when the file is created or opened.
//
// Access is strictly sequential through Reader and Writer cursors; that is the
// access pattern every algorithm here is built from.
// =============================================================================

class RawSequence {
 public:
  RawSequence() = default;
  RawSequence(RawSequence&&) = default;
  RawSequence& operator=(RawSequence&&) = default;

  static RawSequence create(Workspace& ws, const std::filesystem::path& path,
                            const std::string& magic, std::size_t width) {
    check_shape(ws, magic, width);
    RawSequence s;
    s.io_ = BlockIo::create(ws, path);
    s.magic_ = magic;
    s.width_ = width;
    s.count_ = 0;
    s.write_file_header();
    return s;
  }

  static RawSequence create_temp(Workspace& ws, const std::string& stem,
                                 const std::string& magic, std::size_t width) {
    return create(ws, ws.temp_path(stem), magic, width);
  }

  /// Opens an existing sequence. `expected_magic` empty accepts any magic.
  static RawSequence open(Workspace& ws, const std::filesystem::path& path,
                          const std::string& expected_magic = "") {
    RawSequence s;
    s.io_ = BlockIo::open(ws, path);
    std::array<std::byte, BlockIo::header_bytes> h{};
    s.io_.read_header(h.data(), h.size());
    char magic[6] = {};
    std::memcpy(magic, h.data(), 5);
    s.magic_.assign(magic, 5);
    std::uint64_t count;
    std::uint32_t width;
    std::memcpy(&count, h.data() + 8, 8);
    std::memcpy(&width, h.data() + 16, 4);
    if (!expected_magic.empty() && s.magic_ != expected_magic)
      throw FormatError("bad magic in " + path.string() + ": expected " +
                        expected_magic + ", found " + s.magic_);
    if (width == 0)
      throw FormatError("zero record width in " + path.string());
    s.width_ = width;
    s.count_ = count;
    check_shape(ws, s.magic_, s.width_);
    if (s.io_.data_bytes() != count * width)
      throw FormatError("truncated or unfinished sequence " + path.string() +
                        ": header names " + std::to_string(count) +
                        " records of " + std::to_string(width) + " bytes, file holds " +
                        std::to_string(s.io_.data_bytes()) + " data bytes");
    return s;
  }

  const std::string& magic() const { return magic_; }
  std::size_t width() const { return width_; }
  std::uint64_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  const std::filesystem::path& path() const { return io_.path(); }
  std::uint64_t data_bytes() const { return count_ * width_; }

  void remove() { io_.remove(); }

  // ---------------------------------------------------------------------------

  class Reader {
   public:
    explicit Reader(RawSequence& seq)
        : seq_(&seq),
          buffer_(seq.io_.block_size()),
          remaining_(seq.count_) {}

    /// Pointer to the current record, or nullptr at the end. Stable until
    /// advance() is next called.
    const std::byte* peek() {
      if (remaining_ == 0) return nullptr;
      if (pos_ >= filled_) refill();
      return buffer_.data() + pos_;
    }

    void advance() {
      pos_ += seq_->width_;
      --remaining_;
    }

    /// Copies the next record into `out` and advances; false at the end.
    bool next(std::byte* out) {
      const std::byte* p = peek();
      if (!p) return false;
      std::memcpy(out, p, seq_->width_);
      advance();
      return true;
    }

    std::uint64_t remaining() const { return remaining_; }

   private:
    void refill() {
      const std::size_t got = seq_->io_.read_block(next_block_++, buffer_.data());
      if (got == 0) throw InvariantError("sequence shorter than its header count");
      filled_ = got;
      pos_ = 0;
    }

    RawSequence* seq_;
    std::vector<std::byte> buffer_;
    std::uint64_t next_block_ = 0;
    std::size_t filled_ = 0;
    std::size_t pos_ = 0;
    std::uint64_t remaining_ = 0;
  };

  class Writer {
   public:
    explicit Writer(RawSequence& seq)
        : seq_(&seq), buffer_(seq.io_.block_size()) {
      // Resume at the end: reload a trailing short block so it is rewritten
      // whole once more records arrive.
      next_block_ = seq.data_bytes() / buffer_.size();
      const std::size_t tail = seq.data_bytes() % buffer_.size();
      if (tail > 0) {
        const std::size_t got = seq_->io_.read_block(next_block_, buffer_.data());
        if (got != tail) throw InvariantError("sequence tail mismatch");
        pos_ = tail;
      }
    }

    ~Writer() {
      if (seq_ && !finished_) {
        // Dropping an unfinished writer leaves the header count stale; the
        // file would be rejected on open. Flush defensively.
        try {
          finish();
        } catch (...) {
        }
      }
    }

    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    void put(const std::byte* record) {
      if (finished_) throw InvariantError("write to a finished sequence writer");
      std::memcpy(buffer_.data() + pos_, record, seq_->width_);
      pos_ += seq_->width_;
      ++seq_->count_;
      if (pos_ == buffer_.size()) {
        seq_->io_.write_block(next_block_++, buffer_.data(), pos_);
        pos_ = 0;
      }
    }

    /// Flushes the partial block and records the final count in the header.
    void finish() {
      if (finished_) return;
      if (pos_ > 0) {
        seq_->io_.write_block(next_block_, buffer_.data(), pos_);
        // Keep the tail resident in case another writer resumes.
      }
      seq_->write_file_header();
      seq_->io_.flush();
      finished_ = true;
    }

    std::uint64_t written() const { return seq_->count_; }

   private:
    RawSequence* seq_;
    std::vector<std::byte> buffer_;
    std::uint64_t next_block_ = 0;
    std::size_t pos_ = 0;
    bool finished_ = false;
  };

  Reader reader() { return Reader(*this); }
  Writer writer() { return Writer(*this); }

 private:
  static void check_shape(Workspace& ws, const std::string& magic,
                          std::size_t width) {
    if (magic.size() != 5)
      throw FormatError("sequence magic must be 5 bytes, got '" + magic + "'");
    const std::size_t block = ws.config().block_size_bytes;
    if (width == 0 || width > block || block % width != 0)
      throw FormatError("record width " + std::to_string(width) +
                        " does not divide block size " + std::to_string(block));
  }

  void write_file_header() {
    std::array<std::byte, BlockIo::header_bytes> h{};
    std::memcpy(h.data(), magic_.data(), 5);
    std::memcpy(h.data() + 8, &count_, 8);
    const std::uint32_t w32 = static_cast<std::uint32_t>(width_);
    std::memcpy(h.data() + 16, &w32, 4);
    io_.write_header(h.data(), h.size());
  }

  BlockIo io_;
  std::string magic_;
  std::size_t width_ = 0;
  std::uint64_t count_ = 0;
};

// =============================================================================
// ExternalSequence<T>: typed view over RawSequence. Record types are plain
// structs whose size is a power of two, so any power-of-two block size holds
// a whole number of them.
// =============================================================================

template <class T>
struct SequenceTraits;  // specialized per record type: magic() and stem()

template <class T>
class ExternalSequence {
  static_assert(std::is_trivially_copyable_v<T>);
  static_assert(std::has_single_bit(sizeof(T)),
                "record sizes are padded to powers of two");

 public:
  ExternalSequence() = default;
  explicit ExternalSequence(RawSequence raw) : raw_(std::move(raw)) {}

  static ExternalSequence create(Workspace& ws,
                                 const std::filesystem::path& path) {
    return ExternalSequence(
        RawSequence::create(ws, path, SequenceTraits<T>::magic(), sizeof(T)));
  }

  static ExternalSequence create_temp(Workspace& ws) {
    return ExternalSequence(RawSequence::create_temp(
        ws, SequenceTraits<T>::stem(), SequenceTraits<T>::magic(), sizeof(T)));
  }

  static ExternalSequence open(Workspace& ws,
                               const std::filesystem::path& path) {
    RawSequence raw = RawSequence::open(ws, path, SequenceTraits<T>::magic());
    if (raw.width() != sizeof(T))
      throw FormatError("record width mismatch in " + path.string());
    return ExternalSequence(std::move(raw));
  }

  std::uint64_t size() const { return raw_.size(); }
  bool empty() const { return raw_.empty(); }
  const std::filesystem::path& path() const { return raw_.path(); }
  RawSequence& raw() { return raw_; }
  const RawSequence& raw() const { return raw_; }
  RawSequence take_raw() && { return std::move(raw_); }
  void remove() { raw_.remove(); }

  class Reader {
   public:
    explicit Reader(ExternalSequence& s) : r_(s.raw_) {}

    const T* peek() { return reinterpret_cast<const T*>(r_.peek()); }
    void advance() { r_.advance(); }

    std::optional<T> next() {
      const T* p = peek();
      if (!p) return std::nullopt;
      T v = *p;
      advance();
      return v;
    }

    std::uint64_t remaining() const { return r_.remaining(); }

   private:
    RawSequence::Reader r_;
  };

  class Writer {
   public:
    explicit Writer(ExternalSequence& s) : w_(s.raw_) {}
    void put(const T& v) {
      w_.put(reinterpret_cast<const std::byte*>(&v));
    }
    void finish() { w_.finish(); }
    std::uint64_t written() const { return w_.written(); }

   private:
    RawSequence::Writer w_;
  };

  Reader reader() { return Reader(*this); }
  Writer writer() { return Writer(*this); }

  /// Diagnostic convenience for small sequences (tests, oracles).
  std::vector<T> read_all() {
    std::vector<T> out;
    out.reserve(static_cast<std::size_t>(size()));
    auto r = reader();
    while (const T* p = r.peek()) {
      out.push_back(*p);
      r.advance();
    }
    return out;
  }

 private:
  RawSequence raw_;
};

}  // namespace embisim
