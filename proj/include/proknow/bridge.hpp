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

#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "proknow/error.hpp"
#include "proknow/ngram.hpp"

namespace proknow::bridge {

using json = nlohmann::json;

inline constexpr std::string_view kProtocol = "proknow/1";
inline constexpr std::chrono::milliseconds kDefaultTimeout{30'000};

struct Request {
  std::string id;
  std::vector<std::string> context;  // previous question, then the answer if any
  std::string item;
  std::optional<std::string> expected_tag;
  std::optional<int> expected_rank;
  std::size_t width = 8;
};

inline json to_json(const Request& r) {
  return {{"proto", kProtocol},
          {"id", r.id},
          {"context", r.context},
          {"item", r.item},
          {"expected_tag", r.expected_tag ? json(*r.expected_tag) : json(nullptr)},
          {"expected_rank", r.expected_rank ? json(*r.expected_rank) : json(nullptr)},
          {"width", r.width}};
}

inline std::string encode_request(const Request& r) { return to_json(r).dump(); }

inline Request decode_request(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw SourceError("bridge: malformed request");
  if (j.value("proto", std::string{}) != kProtocol) throw SourceError("bridge: protocol mismatch");
  Request r;
  r.id = j.at("id").get<std::string>();
  r.context = j.value("context", std::vector<std::string>{});
  r.item = j.value("item", std::string{});
  if (j.contains("expected_tag") && j["expected_tag"].is_string()) r.expected_tag = j["expected_tag"].get<std::string>();
  if (j.contains("expected_rank") && j["expected_rank"].is_number_integer()) r.expected_rank = j["expected_rank"].get<int>();
  r.width = j.value("width", std::size_t{8});
  return r;
}

inline std::string encode_response(const std::string& id, const std::vector<ScoredText>& candidates) {
  json list = json::array();
  for (const auto& c : candidates) list.push_back({{"text", c.text}, {"logprob", c.logprob}});
  return json{{"proto", kProtocol}, {"id", id}, {"candidates", std::move(list)}}.dump();
}

inline std::string encode_error(const std::string& id, const std::string& message) {
  return json{{"proto", kProtocol}, {"id", id}, {"error", message}}.dump();
}

// Parses one response line for request `expected_id`. Unknown fields are
// ignored; a protocol mismatch, an error record, an id mismatch or an empty
// candidate list are all failures.
inline std::vector<ScoredText> decode_response(std::string_view line, std::string_view expected_id) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw SourceError("bridge: malformed response");
  if (!j.contains("proto") || !j["proto"].is_string() || j["proto"].get<std::string>() != kProtocol)
    throw SourceError("bridge: protocol mismatch (expected " + std::string(kProtocol) + ")");
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>() != expected_id)
    throw SourceError("bridge: response id does not match request " + std::string(expected_id));
  if (j.contains("error")) throw SourceError("bridge: " + j["error"].dump());
  if (!j.contains("candidates") || !j["candidates"].is_array()) throw SourceError("bridge: malformed response");
  std::vector<ScoredText> out;
  for (const auto& c : j["candidates"]) {
    if (!c.is_object() || !c.contains("text") || !c["text"].is_string() || !c.contains("logprob") ||
        !c["logprob"].is_number())
      throw SourceError("bridge: malformed candidate");
    ScoredText s{c["text"].get<std::string>(), c["logprob"].get<double>()};
    if (s.text.empty() || s.text.find('\n') != std::string::npos || !std::isfinite(s.logprob))
      throw SourceError("bridge: malformed candidate");
    out.push_back(std::move(s));
  }
  if (out.empty()) throw SourceError("bridge: empty candidate set");
  return out;
}

// Deterministic UUID-shaped request id.
inline std::string make_request_id(std::uint64_t seed, std::string_view item_id, std::uint64_t counter) {
  const std::uint64_t hi = mix_seed(seed, item_id, counter * 2 + 1);
  const std::uint64_t lo = mix_seed(seed, item_id, counter * 2 + 2);
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08x-%04x-4%03x-%04x-%012llx", static_cast<unsigned>(hi >> 32),
                static_cast<unsigned>((hi >> 16) & 0xffff), static_cast<unsigned>(hi & 0x0fff),
                static_cast<unsigned>(0x8000 | ((lo >> 48) & 0x3fff)),
                static_cast<unsigned long long>(lo & 0xffffffffffffull));
  return buf;
}

// ---------------------------------------------------------------------------
// Transports

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send_line(const std::string& line) = 0;
  virtual std::string receive_line(std::chrono::milliseconds timeout) = 0;
};

// In-process transport over standard streams; the timeout is not enforced.
class StreamTransport : public Transport {
 public:
  StreamTransport(std::istream& in, std::ostream& out) : in_(&in), out_(&out) {}

  void send_line(const std::string& line) override {
    *out_ << line << '\n';
    out_->flush();
  }

  std::string receive_line(std::chrono::milliseconds) override {
    std::string line;
    if (!std::getline(*in_, line)) throw SourceError("bridge: connection closed");
    return line;
  }

 private:
  std::istream* in_;
  std::ostream* out_;
};

namespace detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SourceError(std::string("bridge: write failed: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

// Buffered line reader with a poll()-based deadline.
class LineReader {
 public:
  std::string read_line(int fd, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw SourceError("bridge: timeout waiting for response");
      pollfd p{fd, POLLIN, 0};
      const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw SourceError(std::string("bridge: poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) throw SourceError("bridge: timeout waiting for response");
      char chunk[4096];
      const ssize_t n = ::read(fd, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SourceError(std::string("bridge: read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw SourceError("bridge: connection closed");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  std::string buffer_;
};

}  // namespace detail

// Spawns `/bin/sh -c command` and talks to it over its stdin/stdout.
class ProcessTransport : public Transport {
 public:
  explicit ProcessTransport(const std::string& command) {
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw SourceError("bridge: pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw SourceError("bridge: pipe failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw SourceError("bridge: fork failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_ = detail::Fd(to_child[1]);
    read_ = detail::Fd(from_child[0]);
    ::signal(SIGPIPE, SIG_IGN);
  }

  ~ProcessTransport() override {
    write_.reset();
    read_.reset();
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
        ::usleep(10'000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }

  void send_line(const std::string& line) override { detail::write_all(write_.get(), line + "\n"); }
  std::string receive_line(std::chrono::milliseconds timeout) override { return reader_.read_line(read_.get(), timeout); }

 private:
  pid_t pid_ = -1;
  detail::Fd write_;
  detail::Fd read_;
  detail::LineReader reader_;
};

class TcpTransport : public Transport {
 public:
  TcpTransport(const std::string& host, const std::string& port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
      throw SourceError("bridge: cannot resolve " + host + ":" + port);
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
    for (addrinfo* a = res; a; a = a->ai_next) {
      detail::Fd fd(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
      if (fd.get() < 0) continue;
      if (::connect(fd.get(), a->ai_addr, a->ai_addrlen) == 0) {
        sock_ = std::move(fd);
        break;
      }
    }
    if (sock_.get() < 0) throw SourceError("bridge: cannot connect to " + host + ":" + port);
    ::signal(SIGPIPE, SIG_IGN);
  }

  void send_line(const std::string& line) override { detail::write_all(sock_.get(), line + "\n"); }
  std::string receive_line(std::chrono::milliseconds timeout) override { return reader_.read_line(sock_.get(), timeout); }

 private:
  detail::Fd sock_;
  detail::LineReader reader_;
};

// "tcp://host:port" or "exec:<shell command>".
inline std::unique_ptr<Transport> connect(const std::string& endpoint) {
  constexpr std::string_view kTcp = "tcp://";
  constexpr std::string_view kExec = "exec:";
  if (endpoint.starts_with(kTcp)) {
    const std::string rest = endpoint.substr(kTcp.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw ConfigError("bridge endpoint needs a port: " + endpoint);
    return std::make_unique<TcpTransport>(rest.substr(0, colon), rest.substr(colon + 1));
  }
  if (endpoint.starts_with(kExec)) return std::make_unique<ProcessTransport>(endpoint.substr(kExec.size()));
  throw ConfigError("unsupported bridge endpoint '" + endpoint + "' (use tcp://host:port or exec:<command>)");
}

// One request in flight per connection.
class Client {
 public:
  explicit Client(std::unique_ptr<Transport> transport, std::chrono::milliseconds timeout = kDefaultTimeout)
      : transport_(std::move(transport)), timeout_(timeout) {}

  std::vector<ScoredText> request(const Request& r) {
    std::lock_guard lock(mutex_);
    transport_->send_line(encode_request(r));
    return decode_response(transport_->receive_line(timeout_), r.id);
  }

 private:
  std::mutex mutex_;
  std::unique_ptr<Transport> transport_;
  std::chrono::milliseconds timeout_;
};

}  // namespace proknow::bridge
