#include "bridgewire/io.hpp"

#include <arpa/inet.h>
#include <fmt/format.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

namespace bridgewire {

std::size_t SpanSource::read_some(std::span<std::uint8_t> out) {
  const std::size_t n = std::min({out.size(), bytes_.size() - pos_, max_chunk_});
  std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_), n, out.begin());
  pos_ += n;
  return n;
}

namespace {
constexpr std::size_t kBufferSize = 64 * 1024;
}

SocketStream::SocketStream(int fd) : fd_(fd), in_(kBufferSize) {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  out_.reserve(kBufferSize);
}

SocketStream::~SocketStream() {
  if (fd_ >= 0) ::close(fd_);
}

void SocketStream::write(std::span<const std::uint8_t> bytes) {
  if (out_.size() + bytes.size() > kBufferSize) {
    flush();
    if (bytes.size() > kBufferSize) {
      // Large payloads go straight to the socket.
      out_.assign(bytes.begin(), bytes.end());
      flush();
      return;
    }
  }
  out_.insert(out_.end(), bytes.begin(), bytes.end());
}

void SocketStream::flush() {
  std::size_t off = 0;
  while (off < out_.size()) {
    auto n = ::send(fd_, out_.data() + off, out_.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      out_.clear();
      throw IoError(fmt::format("send failed: {}", std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
  bytes_written_ += out_.size();
  out_.clear();
}

std::size_t SocketStream::read_some(std::span<std::uint8_t> out) {
  if (out.empty()) return 0;
  if (in_pos_ == in_end_) {
    // Bulk reads bypass the buffer.
    if (out.size() >= in_.size()) {
      while (true) {
        auto n = ::recv(fd_, out.data(), out.size(), 0);
        if (n < 0 && errno == EINTR) continue;
        if (n < 0) {
          if (errno == ECONNRESET || errno == ENOTCONN || errno == EBADF) return 0;
          throw IoError(fmt::format("recv failed: {}", std::strerror(errno)));
        }
        bytes_read_ += static_cast<std::size_t>(n);
        return static_cast<std::size_t>(n);
      }
    }
    while (true) {
      auto n = ::recv(fd_, in_.data(), in_.size(), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n < 0) {
        if (errno == ECONNRESET || errno == ENOTCONN || errno == EBADF) return 0;
        throw IoError(fmt::format("recv failed: {}", std::strerror(errno)));
      }
      if (n == 0) return 0;
      bytes_read_ += static_cast<std::size_t>(n);
      in_pos_ = 0;
      in_end_ = static_cast<std::size_t>(n);
      break;
    }
  }
  const std::size_t n = std::min(out.size(), in_end_ - in_pos_);
  std::memcpy(out.data(), in_.data() + in_pos_, n);
  in_pos_ += n;
  return n;
}

void SocketStream::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

bool SocketStream::peer_closed() const {
  pollfd p{fd_, POLLRDHUP, 0};
  if (::poll(&p, 1, 0) <= 0) return false;
  return (p.revents & (POLLRDHUP | POLLHUP | POLLERR | POLLNVAL)) != 0;
}

namespace {

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  auto service = std::to_string(port);
  int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) throw IoError(fmt::format("cannot resolve {}: {}", host, ::gai_strerror(rc)));
  return res;
}

}  // namespace

int tcp_connect(const std::string& host, std::uint16_t port) {
  addrinfo* res = resolve(host, port, false);
  int last_errno = 0;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      last_errno = errno;
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      return fd;
    }
    last_errno = errno;
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw IoError(fmt::format("cannot connect to {}:{}: {}", host, port, std::strerror(last_errno)));
}

int tcp_listen(const std::string& host, std::uint16_t port, std::uint16_t& bound_port) {
  addrinfo* res = resolve(host, port, true);
  int last_errno = 0;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      last_errno = errno;
      continue;
    }
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      sockaddr_storage addr{};
      socklen_t len = sizeof addr;
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
      bound_port = addr.ss_family == AF_INET6
                       ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                       : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
      ::freeaddrinfo(res);
      return fd;
    }
    last_errno = errno;
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw IoError(fmt::format("cannot listen on {}:{}: {}", host, port, std::strerror(last_errno)));
}

}  // namespace bridgewire
