// Copyright 2026 The moi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Line-delimited JSON wire protocol and the POSIX plumbing under it.
//
// Every message is one JSON object on one line (UTF-8, '\n' terminated).
//
//   server hello  {"kind":"hello","version":1,"n":N,"score_kind":"logit",
//                  "input_refs":["s0",...],"concurrent":true}
//   request       {"id":7,"kind":"score","input_ref":"s0","masks":["05","ff"]}
//   request       {"id":8,"kind":"score_tensor","shape":[C,H,W],
//                  "tensors":[[v0,v1,...],...]}
//   response      {"id":7,"scores":[0.25,-1.5]}
//   error         {"id":7,"error":"unknown input_ref 'x'"}
//
// The server speaks first. Masks are Coalition::to_hex strings. A line the
// server cannot parse gets an error response whose id is the request id if
// one could be read, else null; the session continues.

#ifndef MOI_WIRE_HPP_
#define MOI_WIRE_HPP_

#include <arpa/inet.h>
#include <fcntl.h>
#include <limits.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "moi/error.hpp"

namespace moi::wire {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxLineBytes = std::size_t{1} << 30;

using Json = nlohmann::json;

inline std::string encode(const Json& message) { return message.dump() + "\n"; }

namespace detail {

inline std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

inline void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

inline int remaining_ms(std::chrono::steady_clock::time_point deadline) {
  if (deadline == std::chrono::steady_clock::time_point::max()) return -1;
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

inline std::chrono::steady_clock::time_point deadline_after(double seconds) {
  if (seconds <= 0) return std::chrono::steady_clock::time_point::max();
  return std::chrono::steady_clock::now() +
         std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds));
}

}  // namespace detail

/// Owns a file descriptor.
class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) : fd_(fd) {}
  UniqueFd(UniqueFd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  UniqueFd& operator=(UniqueFd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  UniqueFd(const UniqueFd&) = delete;
  UniqueFd& operator=(const UniqueFd&) = delete;
  ~UniqueFd() { reset(); }

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset(int fd = -1) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }

 private:
  int fd_ = -1;
};

/// A bidirectional line channel over one or two descriptors.
///
/// Writes drain pending input while they wait for the peer, so a client
/// pushing large pipelined requests cannot deadlock against a server that
/// is blocked writing responses.
class LineChannel {
 public:
  LineChannel(int read_fd, int write_fd, bool is_socket) : rfd_(read_fd), wfd_(write_fd), socket_(is_socket) {
    detail::ignore_sigpipe();
  }

  /// Next line without its terminator; nullopt at end of stream.
  /// Throws Timeout when the deadline passes first.
  std::optional<std::string> read_line(double timeout_seconds = 0) {
    const auto deadline = detail::deadline_after(timeout_seconds);
    while (true) {
      if (auto line = take_line()) return line;
      if (eof_) {
        if (buffer_.empty()) return std::nullopt;
        return std::exchange(buffer_, std::string());
      }
      pollfd p{rfd_, POLLIN, 0};
      const int rc = ::poll(&p, 1, detail::remaining_ms(deadline));
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kIoError, detail::errno_text("poll"));
      }
      if (rc == 0) fail(ErrorCode::kTimeout, "no message within " + std::to_string(timeout_seconds) + " s");
      fill();
    }
  }

  void write_line(std::string_view text, double timeout_seconds = 0) {
    std::string owned;
    if (text.empty() || text.back() != '\n') {
      owned = std::string(text) + "\n";
      text = owned;
    }
    const auto deadline = detail::deadline_after(timeout_seconds);
    while (!text.empty()) {
      pollfd p[2] = {{wfd_, POLLOUT, 0}, {rfd_, POLLIN, 0}};
      const nfds_t count = eof_ ? 1 : 2;
      const int rc = ::poll(p, count, detail::remaining_ms(deadline));
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kIoError, detail::errno_text("poll"));
      }
      if (rc == 0) fail(ErrorCode::kTimeout, "peer stopped reading for " + std::to_string(timeout_seconds) + " s");
      if (count == 2 && (p[1].revents & (POLLIN | POLLHUP))) fill();
      if (p[0].revents & (POLLERR | POLLHUP)) fail(ErrorCode::kRemoteError, "connection closed by peer");
      if (p[0].revents & POLLOUT) {
        const ssize_t w = socket_ ? ::send(wfd_, text.data(), text.size(), MSG_NOSIGNAL | MSG_DONTWAIT)
                                  : ::write(wfd_, text.data(), std::min<std::size_t>(text.size(), PIPE_BUF));
        if (w < 0) {
          if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) continue;
          if (errno == EPIPE || errno == ECONNRESET) fail(ErrorCode::kRemoteError, "connection closed by peer");
          fail(ErrorCode::kIoError, detail::errno_text("write"));
        }
        text.remove_prefix(static_cast<std::size_t>(w));
      }
    }
  }

  void send(const Json& message, double timeout_seconds = 0) { write_line(encode(message), timeout_seconds); }

  bool at_eof() const { return eof_ && buffer_.empty(); }

 private:
  std::optional<std::string> take_line() {
    const auto nl = buffer_.find('\n');
    if (nl == std::string::npos) {
      if (buffer_.size() > kMaxLineBytes) fail(ErrorCode::kProtocolError, "message exceeds the line limit");
      return std::nullopt;
    }
    std::string line = buffer_.substr(0, nl);
    buffer_.erase(0, nl + 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  void fill() {
    char chunk[65536];
    const ssize_t r = ::read(rfd_, chunk, sizeof chunk);
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN) return;
      if (errno == ECONNRESET) {
        eof_ = true;
        return;
      }
      fail(ErrorCode::kIoError, detail::errno_text("read"));
    }
    if (r == 0) {
      eof_ = true;
      return;
    }
    buffer_.append(chunk, static_cast<std::size_t>(r));
  }

  int rfd_;
  int wfd_;
  bool socket_;
  bool eof_ = false;
  std::string buffer_;
};

// ---------------------------------------------------------------------------
// TCP

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;
};

/// "host:port", optionally prefixed with "tcp://".
inline Endpoint parse_endpoint(std::string_view address) {
  if (address.starts_with("tcp://")) address.remove_prefix(6);
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == address.size()) {
    fail(ErrorCode::kInvalidArgument, "address '" + std::string(address) + "' is not host:port");
  }
  Endpoint e;
  e.host = std::string(address.substr(0, colon));
  if (e.host.empty()) e.host = "127.0.0.1";
  int port = 0;
  for (char c : address.substr(colon + 1)) {
    if (c < '0' || c > '9' || port > 65535) fail(ErrorCode::kInvalidArgument, "bad port in '" + std::string(address) + "'");
    port = port * 10 + (c - '0');
  }
  if (port > 65535) fail(ErrorCode::kInvalidArgument, "bad port in '" + std::string(address) + "'");
  e.port = port;
  return e;
}

inline UniqueFd tcp_connect(const Endpoint& e, double timeout_seconds) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(e.port);
  if (int rc = ::getaddrinfo(e.host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    fail(ErrorCode::kRemoteError, "cannot resolve " + e.host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no address";
  for (addrinfo* a = found; a != nullptr; a = a->ai_next) {
    UniqueFd fd(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
    if (!fd) continue;
    const int flags = ::fcntl(fd.get(), F_GETFL);
    ::fcntl(fd.get(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd.get(), a->ai_addr, a->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      pollfd p{fd.get(), POLLOUT, 0};
      rc = ::poll(&p, 1, detail::remaining_ms(detail::deadline_after(timeout_seconds)));
      if (rc == 0) {
        ::freeaddrinfo(found);
        fail(ErrorCode::kTimeout, "connect to " + e.host + ":" + port + " timed out");
      }
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
      rc = err == 0 ? 0 : -1;
      errno = err;
    }
    if (rc == 0) {
      ::fcntl(fd.get(), F_SETFL, flags);
      const int one = 1;
      ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      ::freeaddrinfo(found);
      return fd;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(found);
  fail(ErrorCode::kRemoteError, "cannot connect to " + e.host + ":" + port + ": " + last_error);
}

/// A listening TCP socket.
class TcpListener {
 public:
  /// Port 0 picks an ephemeral port. Throws BindFailure.
  explicit TcpListener(const Endpoint& e) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* found = nullptr;
    const std::string port = std::to_string(e.port);
    if (int rc = ::getaddrinfo(e.host.c_str(), port.c_str(), &hints, &found); rc != 0) {
      fail(ErrorCode::kBindFailure, "cannot resolve " + e.host + ": " + ::gai_strerror(rc));
    }
    std::string last_error = "no address";
    for (addrinfo* a = found; a != nullptr && !fd_; a = a->ai_next) {
      UniqueFd fd(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
      if (!fd) continue;
      const int one = 1;
      ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
      if (::bind(fd.get(), a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd.get(), 16) == 0) {
        fd_ = std::move(fd);
      } else {
        last_error = std::strerror(errno);
      }
    }
    ::freeaddrinfo(found);
    if (!fd_) fail(ErrorCode::kBindFailure, "cannot listen on " + e.host + ":" + port + ": " + last_error);
    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                       : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    host_ = e.host;
  }

  int port() const { return port_; }
  std::string address() const { return host_ + ":" + std::to_string(port_); }

  /// Next connection, or an empty fd once shutdown() has been called.
  UniqueFd accept() {
    while (true) {
      const int fd = ::accept4(fd_.get(), nullptr, nullptr, SOCK_CLOEXEC);
      if (fd >= 0) {
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return UniqueFd(fd);
      }
      if (errno == EINTR || errno == ECONNABORTED) continue;
      return UniqueFd();
    }
  }

  void shutdown() { ::shutdown(fd_.get(), SHUT_RDWR); }

 private:
  UniqueFd fd_;
  std::string host_;
  int port_ = 0;
};

// ---------------------------------------------------------------------------
// Subprocess over stdio

/// A child running `/bin/sh -c command` with its stdin/stdout on pipes.
class Subprocess {
 public:
  explicit Subprocess(const std::string& command) {
    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) fail(ErrorCode::kIoError, detail::errno_text("pipe"));
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      fail(ErrorCode::kIoError, detail::errno_text("pipe"));
    }
    pid_ = ::fork();
    if (pid_ < 0) fail(ErrorCode::kIoError, detail::errno_text("fork"));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    stdin_.reset(to_child[1]);
    stdout_.reset(from_child[0]);
  }

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  ~Subprocess() {
    stdin_.reset();  // EOF asks the child to exit
    stdout_.reset();
    if (pid_ <= 0) return;
    for (int k = 0; k < 200; ++k) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      ::usleep(5000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  int stdin_fd() const { return stdin_.get(); }
  int stdout_fd() const { return stdout_.get(); }
  pid_t pid() const { return pid_; }

 private:
  pid_t pid_ = -1;
  UniqueFd stdin_;
  UniqueFd stdout_;
};

}  // namespace moi::wire

#endif  // MOI_WIRE_HPP_
