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


// Server side of the wire protocol, and the built-in scoring backend.

#ifndef MOI_SERVE_HPP_
#define MOI_SERVE_HPP_

#include <array>
#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "moi/builtin_scorer.hpp"
#include "moi/coalition.hpp"
#include "moi/error.hpp"
#include "moi/image_game.hpp"
#include "moi/wire.hpp"

namespace moi {

/// What a protocol server scores against.
class ScoreBackend {
 public:
  virtual ~ScoreBackend() = default;
  virtual int num_players() const = 0;
  virtual std::vector<std::string> input_refs() const = 0;
  virtual ScoreKind score_kind() const { return ScoreKind::kLogit; }
  /// Whether sessions may call the backend in parallel.
  virtual bool concurrent() const { return true; }

  virtual std::vector<double> score_masks(const std::string& input_ref, std::span<const Coalition> masks) = 0;

  virtual std::vector<double> score_tensors(const std::array<int, 3>& /*shape*/,
                                            const std::vector<std::vector<double>>& /*tensors*/) {
    fail(ErrorCode::kInvalidArgument, "this server does not accept score_tensor requests");
  }
};

/// The seeded network over seeded input vectors. Input ref "s<k>" is the
/// vector seeded_input(seed + k, n); absent elements are zeroed.
/// score_tensor requests run the network on each flattened tensor, which
/// must hold exactly n values.
class BuiltinBackend final : public ScoreBackend {
 public:
  BuiltinBackend(std::uint64_t seed, int n, int samples = 1, int hidden = kDefaultHiddenWidth)
      : net_(seed, n, hidden) {
    check_player_count(n);
    if (samples < 1) fail(ErrorCode::kInvalidArgument, "builtin server needs at least one sample");
    for (int k = 0; k < samples; ++k) {
      refs_.push_back("s" + std::to_string(k));
      inputs_.push_back(seeded_input(seed + static_cast<std::uint64_t>(k), n));
    }
  }

  int num_players() const override { return net_.input_dim(); }
  std::vector<std::string> input_refs() const override { return refs_; }

  std::vector<double> score_masks(const std::string& input_ref, std::span<const Coalition> masks) override {
    const auto& x = input_for(input_ref);
    std::vector<double> masked(x.size());
    std::vector<double> out;
    out.reserve(masks.size());
    for (const auto& s : masks) {
      std::fill(masked.begin(), masked.end(), 0.0);
      s.for_each([&](int k) { masked[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)]; });
      out.push_back(net_.score(masked));
    }
    return out;
  }

  std::vector<double> score_tensors(const std::array<int, 3>& shape,
                                    const std::vector<std::vector<double>>& tensors) override {
    const auto size = static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1]) *
                      static_cast<std::size_t>(shape[2]);
    std::vector<double> out;
    out.reserve(tensors.size());
    for (const auto& t : tensors) {
      if (t.size() != size) fail(ErrorCode::kShapeMismatch, "tensor length does not match its shape");
      out.push_back(net_.score(t));
    }
    return out;
  }

  const std::vector<double>& input_for(const std::string& ref) const {
    for (std::size_t k = 0; k < refs_.size(); ++k) {
      if (refs_[k] == ref) return inputs_[k];
    }
    fail(ErrorCode::kInvalidArgument, "unknown input_ref '" + ref + "'");
  }

  const BuiltinScorer& network() const { return net_; }

 private:
  BuiltinScorer net_;
  std::vector<std::string> refs_;
  std::vector<std::vector<double>> inputs_;
};

inline wire::Json hello_message(const ScoreBackend& backend) {
  return {{"kind", "hello"},
          {"version", wire::kProtocolVersion},
          {"n", backend.num_players()},
          {"score_kind", std::string(to_string(backend.score_kind()))},
          {"input_refs", backend.input_refs()},
          {"concurrent", backend.concurrent()}};
}

/// One request line in, one response object out. Never throws for bad
/// input; problems become error responses.
inline wire::Json handle_request(ScoreBackend& backend, const std::string& line, std::mutex* serialize = nullptr) {
  wire::Json id = nullptr;
  try {
    const auto request = wire::Json::parse(line);
    if (!request.is_object()) return {{"id", id}, {"error", "malformed request: not a JSON object"}};
    if (request.contains("id")) id = request["id"];
    if (!id.is_number_integer()) return {{"id", id}, {"error", "malformed request: id must be an integer"}};
    const std::string kind = request.at("kind").get<std::string>();

    std::vector<double> scores;
    std::unique_lock<std::mutex> lock;
    if (serialize != nullptr) lock = std::unique_lock(*serialize);
    if (kind == "score") {
      const auto ref = request.at("input_ref").get<std::string>();
      const int n = backend.num_players();
      std::vector<Coalition> masks;
      for (const auto& m : request.at("masks")) masks.push_back(Coalition::from_hex(n, m.get<std::string>()));
      scores = backend.score_masks(ref, masks);
    } else if (kind == "score_tensor") {
      const auto shape = request.at("shape").get<std::vector<int>>();
      if (shape.size() != 3) return {{"id", id}, {"error", "shape must have three entries"}};
      scores = backend.score_tensors({shape[0], shape[1], shape[2]},
                                     request.at("tensors").get<std::vector<std::vector<double>>>());
    } else {
      return {{"id", id}, {"error", "unknown request kind '" + kind + "'"}};
    }
    return {{"id", id}, {"scores", scores}};
  } catch (const wire::Json::exception& e) {
    return {{"id", id}, {"error", std::string("malformed request: ") + e.what()}};
  } catch (const std::exception& e) {
    return {{"id", id}, {"error", e.what()}};
  }
}

/// Hello, then request/response until the peer closes.
inline void serve_session(wire::LineChannel& channel, ScoreBackend& backend, std::mutex* serialize = nullptr) {
  try {
    channel.send(hello_message(backend));
    while (auto line = channel.read_line()) {
      if (line->empty()) continue;
      channel.send(handle_request(backend, *line, serialize));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kRemoteError && e.code() != ErrorCode::kIoError) throw;
  }
}

/// Accepts TCP sessions on a background thread, one thread per session.
class TcpServer {
 public:
  TcpServer(std::shared_ptr<ScoreBackend> backend, const wire::Endpoint& endpoint)
      : backend_(std::move(backend)), listener_(endpoint) {
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;
  ~TcpServer() { stop(); }

  int port() const { return listener_.port(); }
  std::string address() const { return listener_.address(); }

  /// Blocks until stop() is called from elsewhere.
  void wait() {
    std::unique_lock lock(mu_);
    stopped_cv_.wait(lock, [this] { return stopping_; });
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      if (stopping_ && !acceptor_.joinable()) return;
      stopping_ = true;
      for (int fd : live_) ::shutdown(fd, SHUT_RDWR);
    }
    stopped_cv_.notify_all();
    listener_.shutdown();
    if (acceptor_.joinable()) acceptor_.join();
    for (auto& t : sessions_) {
      if (t.joinable()) t.join();
    }
    sessions_.clear();
  }

 private:
  void accept_loop() {
    while (true) {
      auto fd = listener_.accept();
      std::lock_guard lock(mu_);
      if (!fd || stopping_) return;
      live_.push_back(fd.get());
      sessions_.emplace_back([this, conn = std::move(fd)]() mutable {
        wire::LineChannel channel(conn.get(), conn.get(), true);
        serve_session(channel, *backend_, backend_->concurrent() ? nullptr : &serial_);
        std::lock_guard inner(mu_);
        std::erase(live_, conn.get());
      });
    }
  }

  std::shared_ptr<ScoreBackend> backend_;
  wire::TcpListener listener_;
  std::mutex mu_;
  std::mutex serial_;
  std::condition_variable stopped_cv_;
  bool stopping_ = false;
  std::vector<int> live_;
  std::vector<std::thread> sessions_;
  std::thread acceptor_;
};

/// One session on this process's stdin/stdout.
inline void serve_stdio(ScoreBackend& backend) {
  wire::LineChannel channel(STDIN_FILENO, STDOUT_FILENO, false);
  serve_session(channel, backend);
}

}  // namespace moi

#endif  // MOI_SERVE_HPP_
