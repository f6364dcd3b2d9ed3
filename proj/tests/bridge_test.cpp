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


#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <thread>

#include "moi/bridge.hpp"
#include "moi/cache.hpp"
#include "moi/interaction.hpp"
#include "moi/serve.hpp"

namespace moi {
namespace {

BridgeConfig tcp_config(const TcpServer& server) {
  BridgeConfig c;
  c.transport = Transport::kTcp;
  c.address = server.address();
  c.timeout = 10;
  return c;
}

std::vector<Coalition> random_coalitions(int n, std::size_t count, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Coalition> out;
  for (std::size_t k = 0; k < count; ++k) {
    Coalition s(n);
    for (int p = 0; p < n; ++p) {
      if (rng() & 1) s.insert(p);
    }
    out.push_back(s);
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no moi::Error thrown";
  return ErrorCode::kInvalidArgument;
}

// A scripted peer: accepts one connection and hands it to `script`.
class ScriptedServer {
 public:
  explicit ScriptedServer(std::function<void(wire::LineChannel&)> script)
      : listener_(wire::Endpoint{"127.0.0.1", 0}) {
    thread_ = std::thread([this, script = std::move(script)] {
      auto fd = listener_.accept();
      if (!fd) return;
      wire::LineChannel channel(fd.get(), fd.get(), true);
      try {
        script(channel);
      } catch (const std::exception&) {
      }
    });
  }
  ~ScriptedServer() {
    listener_.shutdown();
    thread_.join();
  }
  std::string address() const { return listener_.address(); }

 private:
  wire::TcpListener listener_;
  std::thread thread_;
};

TEST(BridgeTest, HandshakeChecksPlayerCount) {
  TcpServer server(std::make_shared<BuiltinBackend>(1, 16), {"127.0.0.1", 0});
  EXPECT_NO_THROW(connect_game(tcp_config(server), 16));
  EXPECT_EQ(code_of([&] { connect_game(tcp_config(server), 64); }), ErrorCode::kHandshakeMismatch);
}

TEST(BridgeTest, HandshakeChecksVersionAndInputRef) {
  TcpServer server(std::make_shared<BuiltinBackend>(1, 8, 2), {"127.0.0.1", 0});
  auto c = tcp_config(server);
  c.protocol_version = 2;
  EXPECT_EQ(code_of([&] { BridgeSession::connect(c); }), ErrorCode::kHandshakeMismatch);
  c = tcp_config(server);
  c.input_ref = "s1";
  EXPECT_EQ(connect_game(c, 8)->input_ref(), "s1");
  c.input_ref = "s9";
  EXPECT_EQ(code_of([&] { connect_game(c, 8); }), ErrorCode::kHandshakeMismatch);
  const auto info = BridgeSession::connect(tcp_config(server))->server();
  EXPECT_EQ(info.version, wire::kProtocolVersion);
  EXPECT_EQ(info.input_refs, (std::vector<std::string>{"s0", "s1"}));
  EXPECT_TRUE(info.concurrent);
}

TEST(BridgeTest, ChunksRequestsAtBatchSize) {
  TcpServer server(std::make_shared<BuiltinBackend>(4, 16), {"127.0.0.1", 0});
  auto c = tcp_config(server);
  c.batch_size = 1000;
  auto remote = connect_game(c, 16);
  BuiltinVectorGame local(4, 16);
  const auto batch = random_coalitions(16, 2500, 9);
  const auto got = remote->evaluate_batch(batch);
  EXPECT_EQ(remote->session().requests_sent(), 3u);
  EXPECT_EQ(got, local.evaluate_batch(batch));
}

TEST(BridgeTest, MatchesInProcessScorer) {
  TcpServer server(std::make_shared<BuiltinBackend>(12, 40), {"127.0.0.1", 0});
  auto c = tcp_config(server);
  c.batch_size = 7;
  auto remote = connect_game(c, 40);
  BuiltinVectorGame local(12, 40);
  const auto batch = random_coalitions(40, 300, 1);
  const auto a = remote->evaluate_batch(batch);
  const auto b = local.evaluate_batch(batch);
  for (std::size_t k = 0; k < batch.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
  EXPECT_EQ(a, b);  // shortest round-trip printing is exact
}

TEST(BridgeTest, SecondSampleUsesItsOwnInput) {
  TcpServer server(std::make_shared<BuiltinBackend>(5, 10, 3), {"127.0.0.1", 0});
  auto c = tcp_config(server);
  c.input_ref = "s2";
  auto remote = connect_game(c, 10);
  BuiltinVectorGame local(BuiltinScorer(5, 10), seeded_input(7, 10));
  const auto batch = random_coalitions(10, 50, 2);
  EXPECT_EQ(remote->evaluate_batch(batch), local.evaluate_batch(batch));
}

TEST(BridgeTest, MalformedLinesGetErrorsAndSessionContinues) {
  TcpServer server(std::make_shared<BuiltinBackend>(2, 8), {"127.0.0.1", 0});
  auto fd = wire::tcp_connect(wire::parse_endpoint(server.address()), 5);
  wire::LineChannel ch(fd.get(), fd.get(), true);
  const auto hello = wire::Json::parse(*ch.read_line(5));
  EXPECT_EQ(hello["kind"], "hello");
  EXPECT_EQ(hello["n"], 8);

  auto roundtrip = [&](const std::string& line) {
    ch.write_line(line, 5);
    return wire::Json::parse(*ch.read_line(5));
  };
  auto r = roundtrip("this is not json");
  EXPECT_TRUE(r["id"].is_null());
  EXPECT_TRUE(r.contains("error"));
  r = roundtrip(R"({"id":5,"kind":"score","input_ref":"s0","masks":["zz"]})");
  EXPECT_EQ(r["id"], 5);
  EXPECT_TRUE(r.contains("error"));
  r = roundtrip(R"({"id":6,"kind":"score","input_ref":"nope","masks":["00"]})");
  EXPECT_EQ(r["id"], 6);
  EXPECT_NE(r["error"].get<std::string>().find("nope"), std::string::npos);
  r = roundtrip(R"({"id":7,"kind":"launch","input_ref":"s0","masks":[]})");
  EXPECT_EQ(r["id"], 7);
  EXPECT_TRUE(r.contains("error"));
  r = roundtrip(R"({"id":8,"kind":"score","input_ref":"s0"})");
  EXPECT_EQ(r["id"], 8);
  EXPECT_TRUE(r.contains("error"));

  r = roundtrip(R"({"id":9,"kind":"score","input_ref":"s0","masks":["00","ff","05"]})");
  ASSERT_TRUE(r.contains("scores"));
  BuiltinVectorGame local(2, 8);
  EXPECT_EQ(r["scores"][1].get<double>(), local.evaluate(Coalition::full(8)));
  EXPECT_EQ(r["scores"][2].get<double>(), local.evaluate(Coalition::of(8, {0, 2})));
}

TEST(BridgeTest, BuiltinEndsFiniteForManySeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    BuiltinBackend backend(seed, 24);
    const std::vector<Coalition> ends{Coalition(24), Coalition::full(24)};
    for (double v : backend.score_masks("s0", ends)) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(BridgeTest, OutOfOrderResponsesAreReassociated) {
  BuiltinBackend backend(3, 6);
  ScriptedServer peer([&](wire::LineChannel& ch) {
    ch.send(hello_message(backend));
    // Answer each pair of requests newest first.
    while (true) {
      auto a = ch.read_line();
      if (!a) return;
      auto b = ch.read_line();
      if (!b) {
        ch.send(handle_request(backend, *a));
        return;
      }
      ch.send(handle_request(backend, *b));
      ch.send(handle_request(backend, *a));
    }
  });
  BridgeConfig c;
  c.address = peer.address();
  c.batch_size = 3;
  c.pipeline_depth = 2;
  c.timeout = 10;
  auto remote = connect_game(c, 6);
  BuiltinVectorGame local(3, 6);
  const auto batch = random_coalitions(6, 12, 4);
  EXPECT_EQ(remote->evaluate_batch(batch), local.evaluate_batch(batch));
  EXPECT_EQ(remote->session().requests_sent(), 4u);
}

TEST(BridgeTest, DroppedConnectionIsRemoteError) {
  BuiltinBackend backend(3, 6);
  ScriptedServer peer([&](wire::LineChannel& ch) {
    ch.send(hello_message(backend));
    (void)ch.read_line();
  });
  BridgeConfig c;
  c.address = peer.address();
  c.timeout = 10;
  auto remote = connect_game(c, 6);
  const auto batch = random_coalitions(6, 10, 4);
  EXPECT_EQ(code_of([&] { remote->evaluate_batch(batch); }), ErrorCode::kRemoteError);
  EXPECT_EQ(code_of([&] { remote->evaluate_batch(batch); }), ErrorCode::kRemoteError);
}

TEST(BridgeTest, DroppedConnectionSurvivesCacheLayer) {
  BuiltinBackend backend(3, 6);
  ScriptedServer peer([&](wire::LineChannel& ch) { ch.send(hello_message(backend)); });
  BridgeConfig c;
  c.address = peer.address();
  c.timeout = 10;
  auto remote = connect_game(c, 6);
  CachedGame cached(*remote);
  EXPECT_EQ(code_of([&] { multi_order_exact(cached, 0, 1, 2); }), ErrorCode::kRemoteError);
}

TEST(BridgeTest, ServerErrorMessagePropagates) {
  ScriptedServer peer([&](wire::LineChannel& ch) {
    ch.send(wire::Json{{"kind", "hello"}, {"version", 1}, {"n", 4}, {"input_refs", {"a"}}});
    while (auto line = ch.read_line()) {
      ch.send(wire::Json{{"id", wire::Json::parse(*line)["id"]}, {"error", "model on fire"}});
    }
  });
  BridgeConfig c;
  c.address = peer.address();
  c.timeout = 10;
  auto remote = connect_game(c, 4);
  try {
    remote->evaluate(Coalition(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRemoteError);
    EXPECT_NE(std::string(e.what()).find("model on fire"), std::string::npos);
  }
  // Error responses leave the session usable.
  EXPECT_EQ(code_of([&] { remote->evaluate(Coalition(4)); }), ErrorCode::kRemoteError);
  EXPECT_EQ(remote->session().requests_sent(), 2u);
}

TEST(BridgeTest, SilentServerTimesOut) {
  ScriptedServer peer([&](wire::LineChannel& ch) {
    ch.send(wire::Json{{"kind", "hello"}, {"version", 1}, {"n", 4}, {"input_refs", {"a"}}});
    (void)ch.read_line();
    (void)ch.read_line();
  });
  BridgeConfig c;
  c.address = peer.address();
  c.timeout = 0.2;
  auto remote = connect_game(c, 4);
  EXPECT_EQ(code_of([&] { remote->evaluate(Coalition(4)); }), ErrorCode::kTimeout);
}

TEST(BridgeTest, NoServerIsRemoteError) {
  int port = 0;
  {
    wire::TcpListener probe({"127.0.0.1", 0});
    port = probe.port();
  }
  BridgeConfig c;
  c.address = "127.0.0.1:" + std::to_string(port);
  c.timeout = 2;
  EXPECT_EQ(code_of([&] { BridgeSession::connect(c); }), ErrorCode::kRemoteError);
}

TEST(BridgeTest, ExactInteractionsMatchInProcess) {
  for (int n : {6, 10}) {
    TcpServer server(std::make_shared<BuiltinBackend>(n, n), {"127.0.0.1", 0});
    auto c = tcp_config(server);
    c.batch_size = 200;
    auto remote = connect_game(c, n);
    BuiltinVectorGame local(static_cast<std::uint64_t>(n), n);
    const auto pairs = n == 6 ? all_pairs(n) : std::vector<PlayerPair>{{0, 1}, {2, 7}, {3, 9}, {8, 5}};
    SamplingPlan plan;
    const auto a = profile_pairs(*remote, pairs, plan, ProfileMode::kExact);
    const auto b = profile_pairs(local, pairs, plan, ProfileMode::kExact);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t p = 0; p < a.size(); ++p) {
      ASSERT_EQ(a[p].values.size(), static_cast<std::size_t>(n - 1));
      for (std::size_t o = 0; o < a[p].values.size(); ++o) {
        EXPECT_NEAR(a[p].values[o].mean, b[p].values[o].mean, 1e-9);
      }
    }
  }
}

TEST(BridgeTest, ConcurrentSessionsAgree) {
  TcpServer server(std::make_shared<BuiltinBackend>(8, 20), {"127.0.0.1", 0});
  const auto batch = random_coalitions(20, 400, 5);
  std::vector<std::vector<double>> results(4);
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < results.size(); ++t) {
      threads.emplace_back([&, t] {
        auto c = tcp_config(server);
        c.batch_size = 17;
        results[t] = connect_game(c, 20)->evaluate_batch(batch);
      });
    }
  }
  BuiltinVectorGame local(8, 20);
  for (const auto& r : results) EXPECT_EQ(r, local.evaluate_batch(batch));
}

TEST(BridgeTest, TensorModeMatchesMaskMode) {
  const int n = 16;
  TcpServer server(std::make_shared<BuiltinBackend>(21, n), {"127.0.0.1", 0});
  auto c = tcp_config(server);
  c.batch_size = 50;
  auto remote = connect_game(c, n);

  // The served input laid out as a 4x4 single-channel image with one pixel
  // per cell, masked locally against a zero baseline.
  Tensor x(1, 4, 4);
  x.data = seeded_input(21, n);
  auto tensor_game = make_image_game(
      x, std::make_shared<RemoteTensorScorer>(BridgeSession::connect(c)), partition(x, 4), BaselinePolicy::zero());

  const auto batch = random_coalitions(n, 120, 6);
  EXPECT_EQ(tensor_game->evaluate_batch(batch), remote->evaluate_batch(batch));
}

TEST(BridgeTest, StdioSubprocessTransport) {
  BridgeConfig c;
  c.transport = Transport::kStdio;
  c.command = std::string(MOI_CLI_PATH) + " serve-builtin --stdio --seed 3 --n 10";
  c.batch_size = 64;
  c.timeout = 20;
  auto remote = connect_game(c, 10);
  BuiltinVectorGame local(3, 10);
  const auto batch = random_coalitions(10, 500, 8);
  EXPECT_EQ(remote->evaluate_batch(batch), local.evaluate_batch(batch));
  EXPECT_EQ(remote->session().requests_sent(), 8u);
}

TEST(BridgeTest, StdioCommandThatExitsIsRemoteError) {
  BridgeConfig c;
  c.transport = Transport::kStdio;
  c.command = "exit 0";
  c.timeout = 5;
  EXPECT_EQ(code_of([&] { BridgeSession::connect(c); }), ErrorCode::kRemoteError);
}

TEST(BridgeConfigTest, EnvironmentOverrides) {
  BridgeConfig c;
  c.transport = Transport::kStdio;
  c.command = "x";
  ::setenv(kBridgeAddressEnv, "10.1.2.3:9000", 1);
  ::setenv(kBridgeTimeoutEnv, "2.5", 1);
  apply_env_overrides(c);
  EXPECT_EQ(c.transport, Transport::kTcp);
  EXPECT_EQ(c.address, "10.1.2.3:9000");
  EXPECT_EQ(c.timeout, 2.5);
  ::setenv(kBridgeTimeoutEnv, "soon", 1);
  EXPECT_EQ(code_of([&] { apply_env_overrides(c); }), ErrorCode::kConfigError);
  ::unsetenv(kBridgeAddressEnv);
  ::unsetenv(kBridgeTimeoutEnv);
}

TEST(BridgeConfigTest, Validation) {
  BridgeConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.transport = Transport::kStdio;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_THROW(wire::parse_endpoint("nohost"), Error);
  EXPECT_EQ(wire::parse_endpoint("tcp://example.org:81").port, 81);
  EXPECT_EQ(wire::parse_endpoint("tcp://example.org:81").host, "example.org");
}

}  // namespace
}  // namespace moi
