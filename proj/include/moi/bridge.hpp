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


// Client side of the wire protocol: sessions, remote games and the
// tensor-mode scorer.

#ifndef MOI_BRIDGE_HPP_
#define MOI_BRIDGE_HPP_

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moi/coalition.hpp"
#include "moi/error.hpp"
#include "moi/game.hpp"
#include "moi/image_game.hpp"
#include "moi/wire.hpp"

namespace moi {

enum class Transport { kTcp, kStdio };

constexpr std::string_view to_string(Transport t) { return t == Transport::kTcp ? "tcp" : "stdio"; }

inline Transport parse_transport(std::string_view s) {
  if (s == "tcp") return Transport::kTcp;
  if (s == "stdio") return Transport::kStdio;
  fail(ErrorCode::kInvalidArgument, "unknown transport '" + std::string(s) + "'");
}

struct BridgeConfig {
  Transport transport = Transport::kTcp;
  std::string address = "127.0.0.1:7878";  // kTcp
  std::string command;                     // kStdio, run through /bin/sh -c
  std::string input_ref;                   // empty: the first ref the server lists
  int batch_size = 1000;                   // coalitions per request
  double timeout = 30.0;                   // seconds per message
  int protocol_version = wire::kProtocolVersion;
  int pipeline_depth = 4;                  // requests in flight per session

  void validate() const {
    if (batch_size < 1) fail(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
    if (!(timeout > 0)) fail(ErrorCode::kInvalidArgument, "timeout must be positive");
    if (pipeline_depth < 1) fail(ErrorCode::kInvalidArgument, "pipeline_depth must be >= 1");
    if (transport == Transport::kStdio && command.empty()) {
      fail(ErrorCode::kInvalidArgument, "stdio transport needs a command");
    }
  }

  std::string endpoint() const { return transport == Transport::kTcp ? "tcp://" + address : "stdio:" + command; }

  friend bool operator==(const BridgeConfig&, const BridgeConfig&) = default;
};

inline constexpr const char* kBridgeAddressEnv = "MOI_BRIDGE_ADDRESS";
inline constexpr const char* kBridgeTimeoutEnv = "MOI_BRIDGE_TIMEOUT";

/// MOI_BRIDGE_ADDRESS selects TCP at that address; MOI_BRIDGE_TIMEOUT sets
/// the timeout in seconds.
inline void apply_env_overrides(BridgeConfig& config) {
  if (const char* a = std::getenv(kBridgeAddressEnv); a != nullptr && *a != '\0') {
    wire::parse_endpoint(a);
    config.transport = Transport::kTcp;
    config.address = a;
  }
  if (const char* t = std::getenv(kBridgeTimeoutEnv); t != nullptr && *t != '\0') {
    char* end = nullptr;
    const double v = std::strtod(t, &end);
    if (end == t || *end != '\0' || !(v > 0)) {
      fail(ErrorCode::kConfigError, std::string(kBridgeTimeoutEnv) + "='" + t + "' is not a positive number");
    }
    config.timeout = v;
  }
}

struct ServerInfo {
  int version = 0;
  int n = 0;
  ScoreKind score_kind = ScoreKind::kLogit;
  std::vector<std::string> input_refs;
  bool concurrent = false;
};

/// One connection to a protocol server. Not thread-safe; open one session
/// per thread against servers that declare themselves concurrent.
class BridgeSession {
 public:
  static std::unique_ptr<BridgeSession> connect(const BridgeConfig& config) {
    config.validate();
    return std::unique_ptr<BridgeSession>(new BridgeSession(config));
  }

  const ServerInfo& server() const { return info_; }
  const BridgeConfig& config() const { return config_; }
  std::uint64_t requests_sent() const { return requests_; }

  /// Sends `count` requests, at most pipeline_depth in flight, and returns
  /// each one's scores in request order whatever order responses arrive in.
  /// make_request(k) builds request k without its id; expected_size(k) is
  /// the number of scores it must return.
  std::vector<std::vector<double>> exchange(std::size_t count, const std::function<wire::Json(std::size_t)>& make_request,
                                            const std::function<std::size_t(std::size_t)>& expected_size) {
    if (broken_) fail(ErrorCode::kRemoteError, "session to " + config_.endpoint() + " is closed");
    std::vector<std::vector<double>> results(count);
    std::map<std::int64_t, std::size_t> in_flight;
    std::optional<std::string> remote_error;
    std::size_t next = 0;
    try {
      while (next < count || !in_flight.empty()) {
        while (!remote_error && next < count && in_flight.size() < static_cast<std::size_t>(config_.pipeline_depth)) {
          auto request = make_request(next);
          const std::int64_t id = next_id_++;
          request["id"] = id;
          channel_->send(request, config_.timeout);
          ++requests_;
          in_flight.emplace(id, next++);
        }
        if (in_flight.empty()) break;
        auto line = channel_->read_line(config_.timeout);
        if (!line) fail(ErrorCode::kRemoteError, "connection to " + config_.endpoint() + " closed mid-request");
        wire::Json response;
        try {
          response = wire::Json::parse(*line);
        } catch (const wire::Json::exception& e) {
          fail(ErrorCode::kProtocolError, std::string("unparseable response: ") + e.what());
        }
        if (!response.is_object() || !response.contains("id") || !response["id"].is_number_integer()) {
          if (response.is_object() && response.contains("error")) {
            fail(ErrorCode::kRemoteError, "server: " + response["error"].dump());
          }
          fail(ErrorCode::kProtocolError, "response without a usable id: " + *line);
        }
        const auto it = in_flight.find(response["id"].get<std::int64_t>());
        if (it == in_flight.end()) fail(ErrorCode::kProtocolError, "response for unknown id " + response["id"].dump());
        const std::size_t k = it->second;
        in_flight.erase(it);
        if (response.contains("error")) {
          if (!remote_error) {
            remote_error = response["error"].is_string() ? response["error"].get<std::string>() : response["error"].dump();
          }
          continue;
        }
        if (!response.contains("scores") || !response["scores"].is_array()) {
          fail(ErrorCode::kProtocolError, "response " + response["id"].dump() + " has neither scores nor error");
        }
        auto& scores = results[k];
        scores.reserve(response["scores"].size());
        for (const auto& v : response["scores"]) {
          if (!v.is_number()) fail(ErrorCode::kProtocolError, "non-numeric score in response " + response["id"].dump());
          scores.push_back(v.get<double>());
        }
        if (scores.size() != expected_size(k)) {
          fail(ErrorCode::kProtocolError, "response " + response["id"].dump() + " has " + std::to_string(scores.size()) +
                                              " scores for " + std::to_string(expected_size(k)) + " items");
        }
      }
    } catch (const Error&) {
      broken_ = true;
      throw;
    }
    // Every response of this exchange has been read, so the session can go on.
    if (remote_error) fail(ErrorCode::kRemoteError, *remote_error);
    return results;
  }

 private:
  explicit BridgeSession(const BridgeConfig& config) : config_(config) {
    if (config.transport == Transport::kTcp) {
      socket_ = wire::tcp_connect(wire::parse_endpoint(config.address), config.timeout);
      channel_.emplace(socket_.get(), socket_.get(), true);
    } else {
      child_.emplace(config.command);
      channel_.emplace(child_->stdout_fd(), child_->stdin_fd(), false);
    }
    const auto line = channel_->read_line(config.timeout);
    if (!line) fail(ErrorCode::kRemoteError, config.endpoint() + " closed before the handshake");
    try {
      const auto hello = wire::Json::parse(*line);
      if (hello.value("kind", "") != "hello") {
        fail(ErrorCode::kProtocolError, "expected a hello message, got: " + *line);
      }
      info_.version = hello.at("version").get<int>();
      info_.n = hello.at("n").get<int>();
      info_.score_kind = parse_score_kind(hello.value("score_kind", "logit"));
      info_.input_refs = hello.value("input_refs", std::vector<std::string>{});
      info_.concurrent = hello.value("concurrent", false);
    } catch (const wire::Json::exception& e) {
      fail(ErrorCode::kProtocolError, std::string("bad hello: ") + e.what());
    }
    if (info_.version != config.protocol_version) {
      fail(ErrorCode::kHandshakeMismatch, "server speaks protocol version " + std::to_string(info_.version) +
                                              ", client expects " + std::to_string(config.protocol_version));
    }
  }

  BridgeConfig config_;
  std::optional<wire::Subprocess> child_;
  wire::UniqueFd socket_;
  std::optional<wire::LineChannel> channel_;
  ServerInfo info_;
  std::int64_t next_id_ = 1;
  std::uint64_t requests_ = 0;
  bool broken_ = false;
};

namespace detail {

template <typename Item, typename Encode>
std::vector<double> chunked_exchange(BridgeSession& session, std::span<const Item> items, Encode&& encode) {
  const auto batch = static_cast<std::size_t>(session.config().batch_size);
  const std::size_t chunks = (items.size() + batch - 1) / batch;
  const auto chunk_span = [&](std::size_t k) {
    const std::size_t begin = k * batch;
    return items.subspan(begin, std::min(batch, items.size() - begin));
  };
  const auto parts = session.exchange(
      chunks, [&](std::size_t k) { return encode(chunk_span(k)); }, [&](std::size_t k) { return chunk_span(k).size(); });
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace detail

/// A game served remotely: coalitions go over the wire as hex masks against
/// a preloaded input.
class RemoteGame final : public GameEvaluator {
 public:
  /// `input_ref` overrides the session config's ref.
  RemoteGame(std::shared_ptr<BridgeSession> session, int n, std::string input_ref = {})
      : session_(std::move(session)), n_(n), ref_(std::move(input_ref)) {
    const auto& info = session_->server();
    if (info.n != n) {
      fail(ErrorCode::kHandshakeMismatch, "server has n=" + std::to_string(info.n) + ", local n=" + std::to_string(n));
    }
    if (ref_.empty()) ref_ = session_->config().input_ref;
    if (ref_.empty()) {
      if (info.input_refs.empty()) fail(ErrorCode::kHandshakeMismatch, "server lists no input_refs");
      ref_ = info.input_refs.front();
    } else if (std::find(info.input_refs.begin(), info.input_refs.end(), ref_) == info.input_refs.end()) {
      fail(ErrorCode::kHandshakeMismatch, "server does not list input_ref '" + ref_ + "'");
    }
  }

  int num_players() const override { return n_; }

  std::vector<double> evaluate_batch(std::span<const Coalition> coalitions) override {
    for (const auto& s : coalitions) {
      if (s.num_players() != n_) fail(ErrorCode::kInvalidArgument, "coalition built for a different player count");
    }
    return detail::chunked_exchange(*session_, coalitions, [&](std::span<const Coalition> chunk) {
      wire::Json masks = wire::Json::array();
      for (const auto& s : chunk) masks.push_back(s.to_hex());
      return wire::Json{{"kind", "score"}, {"input_ref", ref_}, {"masks", std::move(masks)}};
    });
  }

  std::string descriptor() const override {
    return "remote(" + session_->config().endpoint() + ",ref=" + ref_ + ",n=" + std::to_string(n_) + ")";
  }

  bool concurrency_safe() const override { return false; }

  const std::string& input_ref() const { return ref_; }
  BridgeSession& session() { return *session_; }

 private:
  std::shared_ptr<BridgeSession> session_;
  int n_;
  std::string ref_;
};

/// Tensor mode: masking happens locally and whole masked tensors are sent.
class RemoteTensorScorer final : public ModelScorer {
 public:
  explicit RemoteTensorScorer(std::shared_ptr<BridgeSession> session, int target = 0)
      : session_(std::move(session)), target_(target) {}

  std::vector<double> score_batch(std::span<const Tensor> inputs) override {
    if (inputs.empty()) return {};
    for (const auto& t : inputs) {
      if (!t.same_shape(inputs.front())) fail(ErrorCode::kShapeMismatch, "tensor batch mixes shapes");
    }
    const auto& first = inputs.front();
    return detail::chunked_exchange(*session_, inputs, [&](std::span<const Tensor> chunk) {
      wire::Json tensors = wire::Json::array();
      for (const auto& t : chunk) tensors.push_back(t.data);
      return wire::Json{{"kind", "score_tensor"},
                        {"shape", {first.channels, first.height, first.width}},
                        {"tensors", std::move(tensors)}};
    });
  }

  std::string descriptor() const override { return "remote_tensor(" + session_->config().endpoint() + ")"; }
  bool concurrency_safe() const override { return false; }
  ScoreKind score_kind() const override { return session_->server().score_kind; }
  int target() const override { return target_; }

 private:
  std::shared_ptr<BridgeSession> session_;
  int target_;
};

inline std::unique_ptr<RemoteGame> connect_game(const BridgeConfig& config, int n) {
  return std::make_unique<RemoteGame>(BridgeSession::connect(config), n);
}

}  // namespace moi

#endif  // MOI_BRIDGE_HPP_
