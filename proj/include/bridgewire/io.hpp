#pragma once

/// @file io.hpp
/// @brief Byte sinks and sources the codec reads from and writes to.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bridgewire {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ByteSink {
 public:
  virtual ~ByteSink() = default;
  virtual void write(std::span<const std::uint8_t> bytes) = 0;
  virtual void flush() {}
};

class ByteSource {
 public:
  virtual ~ByteSource() = default;
  /// Reads at least one byte unless the stream ended, in which case returns 0.
  virtual std::size_t read_some(std::span<std::uint8_t> out) = 0;
};

class VectorSink final : public ByteSink {
 public:
  void write(std::span<const std::uint8_t> bytes) override {
    bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
  }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }
  void clear() { bytes_.clear(); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class CountingSink final : public ByteSink {
 public:
  void write(std::span<const std::uint8_t> bytes) override { count_ += bytes.size(); }
  std::size_t count() const { return count_; }

 private:
  std::size_t count_ = 0;
};

/// Serves an in-memory buffer, at most `max_chunk` bytes per read_some call.
class SpanSource final : public ByteSource {
 public:
  explicit SpanSource(std::span<const std::uint8_t> bytes, std::size_t max_chunk = SIZE_MAX)
      : bytes_(bytes), max_chunk_(max_chunk == 0 ? 1 : max_chunk) {}

  std::size_t read_some(std::span<std::uint8_t> out) override;
  std::size_t position() const { return pos_; }
  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t max_chunk_;
  std::size_t pos_ = 0;
};

/// Buffered bidirectional stream over a connected socket. Owns the descriptor.
class SocketStream final : public ByteSink, public ByteSource {
 public:
  explicit SocketStream(int fd);
  ~SocketStream() override;
  SocketStream(const SocketStream&) = delete;
  SocketStream& operator=(const SocketStream&) = delete;

  void write(std::span<const std::uint8_t> bytes) override;
  void flush() override;
  std::size_t read_some(std::span<std::uint8_t> out) override;

  int fd() const { return fd_; }
  /// Shuts down both directions; safe to call from another thread while a
  /// read is blocked, which then observes end of stream.
  void shutdown();
  /// True when the peer has hung up, checked without consuming data.
  bool peer_closed() const;

  std::uint64_t bytes_written() const { return bytes_written_; }
  std::uint64_t bytes_read() const { return bytes_read_; }

 private:
  int fd_;
  std::vector<std::uint8_t> in_;
  std::size_t in_pos_ = 0;
  std::size_t in_end_ = 0;
  std::vector<std::uint8_t> out_;
  std::uint64_t bytes_written_ = 0;
  std::uint64_t bytes_read_ = 0;
};

/// Opens a TCP connection; throws IoError on failure.
int tcp_connect(const std::string& host, std::uint16_t port);

/// Binds and listens; returns the socket and writes the bound port.
int tcp_listen(const std::string& host, std::uint16_t port, std::uint16_t& bound_port);

}  // namespace bridgewire
