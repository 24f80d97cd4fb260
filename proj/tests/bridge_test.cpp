// Copyright 2026 The proknow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <regex>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "test_support.hpp"

namespace proknow {
namespace {

using testing::data_path;
using testing::fixture_path;

const std::string kReplay = PROKNOW_REPLAY_BRIDGE;

std::string replay_endpoint(const std::filesystem::path& fixture) {
  return "exec:" + kReplay + " --replay " + fixture.string();
}

TEST(Protocol, RequestRoundTrip) {
  bridge::Request r;
  r.id = "abc";
  r.context = {"Do you feel nervous?", "yes, a lot"};
  r.item = "Feeling nervous, anxious, or on edge";
  r.expected_tag = "Causes";
  r.expected_rank = 3;
  r.width = 4;
  const auto back = bridge::decode_request(bridge::encode_request(r));
  EXPECT_EQ(back.id, r.id);
  EXPECT_EQ(back.context, r.context);
  EXPECT_EQ(back.item, r.item);
  EXPECT_EQ(back.expected_tag, r.expected_tag);
  EXPECT_EQ(back.expected_rank, r.expected_rank);
  EXPECT_EQ(back.width, 4u);
  const json j = json::parse(bridge::encode_request(r));
  EXPECT_EQ(j["proto"], "proknow/1");

  bridge::Request bare;
  bare.id = "x";
  const json jb = json::parse(bridge::encode_request(bare));
  EXPECT_TRUE(jb["expected_tag"].is_null());
  EXPECT_TRUE(jb["expected_rank"].is_null());
}

TEST(Protocol, ResponseDecoding) {
  const auto ok = bridge::decode_response(
      R"({"proto":"proknow/1","id":"a","candidates":[{"text":"Do you sleep well?","logprob":-3.5,"extra":1}],"model":"m"})",
      "a");
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_EQ(ok[0].text, "Do you sleep well?");
  EXPECT_DOUBLE_EQ(ok[0].logprob, -3.5);

  auto fails = [](const std::string& line, const std::string& needle) {
    try {
      bridge::decode_response(line, "a");
      ADD_FAILURE() << "no error for " << line;
    } catch (const SourceError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  fails(R"({"proto":"proknow/2","id":"a","candidates":[]})", "protocol mismatch");
  fails(R"({"proto":"proknow/1","id":"b","candidates":[{"text":"x","logprob":0}]})", "does not match");
  fails(R"({"proto":"proknow/1","id":"a","error":"model exploded"})", "model exploded");
  fails(R"({"proto":"proknow/1","id":"a","candidates":[]})", "empty candidate set");
  fails(R"({"proto":"proknow/1","id":"a","candidates":[{"text":"","logprob":0}]})", "malformed candidate");
  fails(R"({"proto":"proknow/1","id":"a","candidates":[{"text":"a\nb","logprob":0}]})", "malformed candidate");
  fails(R"({"proto":"proknow/1","id":"a","candidates":[{"text":"x"}]})", "malformed candidate");
  fails("not json", "malformed response");
}

TEST(Protocol, RequestIdsAreDeterministicUuids) {
  const std::regex uuid("[0-9a-f]{8}-[0-9a-f]{4}-4[0-9a-f]{3}-[89ab][0-9a-f]{3}-[0-9a-f]{12}");
  for (std::uint64_t counter = 0; counter < 20; ++counter) {
    const auto id = bridge::make_request_id(7, "gad7-1", counter);
    EXPECT_TRUE(std::regex_match(id, uuid)) << id;
    EXPECT_EQ(id, bridge::make_request_id(7, "gad7-1", counter));
    EXPECT_NE(id, bridge::make_request_id(7, "gad7-1", counter + 1));
  }
}

TEST(Connect, RejectsUnknownEndpoints) {
  EXPECT_THROW(bridge::connect("http://localhost:1"), ConfigError);
  EXPECT_THROW(bridge::connect("tcp://localhost"), ConfigError);
}

class GoldenBridge : public ::testing::Test {
 protected:
  EngineConfig config = load_config(data_path("table2_config.json"));
  Resources res = load_resources(config);
  Scorer scorer{res.dataset, res.lexicon, res.kb, res.vectors};

  SessionOptions options() const {
    SessionOptions o;
    o.score = config.score;
    o.width = config.width;
    o.seed = 7;
    return o;
  }
};

TEST_F(GoldenBridge, FixtureHoldsTenWellFormedPairs) {
  std::ifstream in(fixture_path("bridge_golden.jsonl"));
  std::string line;
  std::size_t pairs = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    const auto request = bridge::decode_request(j["request"].dump());
    const auto candidates = bridge::decode_response(j["response"].dump(), request.id);
    EXPECT_GE(candidates.size(), 1u);
    EXPECT_LE(candidates.size(), request.width);
    ++pairs;
  }
  EXPECT_EQ(pairs, 10u);
}

TEST_F(GoldenBridge, SessionsOverReplayFollowTheProcess) {
  bridge::Client client(bridge::connect(replay_endpoint(fixture_path("bridge_golden.jsonl"))));
  BridgeSource source(client);
  for (const auto& item : res.dataset.items) {
    const auto t = run_session(item, source, scorer, nullptr, options());
    EXPECT_EQ(t.ranks(), (std::vector<int>{1, 2, 3, 4, 5})) << item.item_id;
    EXPECT_TRUE(t.terminated);
    for (const auto& e : t.entries) EXPECT_FALSE(e.fallback);
  }
}

TEST_F(GoldenBridge, UnknownIdIsAnErrorRecord) {
  bridge::Client client(bridge::connect(replay_endpoint(fixture_path("bridge_golden.jsonl"))));
  bridge::Request r;
  r.id = "00000000-0000-4000-8000-000000000000";
  try {
    client.request(r);
    FAIL();
  } catch (const SourceError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown request id"), std::string::npos) << e.what();
  }
  BridgeSource source(client);
  SessionOptions o = options();
  o.seed = 8;
  EXPECT_THROW(run_session(res.dataset.items[0], source, scorer, nullptr, o), SourceError);
}

TEST(ReplayBridge, EmptyFixtureExitsImmediately) {
  testing::TempDir dir;
  dir.write("empty.jsonl", "");
  const std::string cmd = "timeout 10 " + kReplay + " --replay " + (dir / "empty.jsonl").string() + " < /dev/zero";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
}

TEST(ReplayBridge, ProcessExitIsAConnectionError) {
  testing::TempDir dir;
  dir.write("empty.jsonl", "");
  bridge::Client client(bridge::connect(replay_endpoint(dir / "empty.jsonl")), std::chrono::milliseconds(5000));
  bridge::Request r;
  r.id = "x";
  EXPECT_THROW(client.request(r), SourceError);
}

TEST(StreamBridge, EmptyCandidateSetFailsGeneration) {
  const auto ds = testing::table2();
  const ProcessState state(ds.items[0]);
  const std::string id = bridge::make_request_id(3, ds.items[0].item_id, 0);
  std::istringstream replies(R"({"proto":"proknow/1","id":")" + id + R"(","candidates":[]})" + "\n");
  std::ostringstream sent;
  bridge::Client client(std::make_unique<bridge::StreamTransport>(replies, sent));
  BridgeSource source(client);
  try {
    generate_candidates(source, state, 4, 3);
    FAIL();
  } catch (const SourceError& e) {
    EXPECT_NE(std::string(e.what()).find("empty candidate set"), std::string::npos);
  }
  const auto request = bridge::decode_request(sent.str().substr(0, sent.str().find('\n')));
  EXPECT_EQ(request.id, id);
  EXPECT_EQ(request.expected_rank, 1);
  EXPECT_EQ(request.expected_tag, "Yes/No");
  EXPECT_TRUE(request.context.empty());
  EXPECT_EQ(request.width, 4u);
}

// Minimal line server on an ephemeral loopback port.
class LoopbackServer {
 public:
  explicit LoopbackServer(bool answer) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    ::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    ::listen(fd_, 1);
    thread_ = std::thread([this, answer] {
      const int client = ::accept(fd_, nullptr, nullptr);
      if (client < 0) return;
      std::string buf;
      char c;
      while (::read(client, &c, 1) == 1) {
        if (c != '\n') {
          buf.push_back(c);
          continue;
        }
        if (answer) {
          const auto req = bridge::decode_request(buf);
          const std::string reply =
              bridge::encode_response(req.id, {{"Do you feel tense?", -2.0}, {"How often?", -1.0}}) + "\n";
          (void)!::write(client, reply.data(), reply.size());
        }
        buf.clear();
      }
      ::close(client);
    });
  }
  ~LoopbackServer() {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    thread_.join();
  }

  std::string endpoint() const { return "tcp://127.0.0.1:" + std::to_string(port_); }

 private:
  int fd_ = -1;
  int port_ = 0;
  std::thread thread_;
};

TEST(TcpBridge, RequestAndResponse) {
  LoopbackServer server(true);
  {
    bridge::Client client(bridge::connect(server.endpoint()));
    for (int i = 0; i < 3; ++i) {
      bridge::Request r;
      r.id = bridge::make_request_id(1, "tcp", static_cast<std::uint64_t>(i));
      const auto out = client.request(r);
      ASSERT_EQ(out.size(), 2u);
      EXPECT_EQ(out[0].text, "Do you feel tense?");
    }
  }
}

TEST(TcpBridge, SilentServerTimesOut) {
  LoopbackServer server(false);
  {
    bridge::Client client(bridge::connect(server.endpoint()), std::chrono::milliseconds(200));
    bridge::Request r;
    r.id = "slow";
    EXPECT_THROW(client.request(r), SourceError);
  }
}

TEST(BridgeCheck, PingsTheReplayBridge) {
  testing::TempDir dir;
  const std::string id = bridge::make_request_id(0, "bridge-check", 0);
  bridge::Request ping;
  ping.id = id;
  ping.item = "bridge check";
  ping.width = 1;
  dir.write("ping.jsonl", json{{"request", json::parse(bridge::encode_request(ping))},
                               {"response", json::parse(bridge::encode_response(id, {{"Hello?", -1.0}}))}}
                                  .dump() +
                              "\n");
  const std::string endpoint = replay_endpoint(dir / "ping.jsonl");
  const char* argv[] = {"proknow", "--format", "json", "bridge-check", "--endpoint", endpoint.c_str()};
  std::istringstream in;
  std::ostringstream out, err;
  ASSERT_EQ(cli::run_command(6, argv, {in, out, err}), cli::kOk) << err.str();
  const json j = json::parse(out.str());
  EXPECT_EQ(j["protocol"], "proknow/1");
  EXPECT_EQ(j["candidates"], 1);
}

}  // namespace
}  // namespace proknow
