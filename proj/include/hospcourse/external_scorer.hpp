// Copyright 2026 The hospcourse Authors.
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

// Client side of the newline-delimited JSON scorer protocol.
//
//   -> {"op":"hello","version":1}
//   <- {"op":"hello","version":1,"end_token":"<end>"}
//   -> {"op":"score","id":7,"source":"...","prefix":["tok",...],"top_k":50}
//   <- {"op":"score","id":7,"tokens":[{"t":"tok","lp":-0.1},...]}
//   <- {"op":"error","id":7,"message":"..."}
//
// The hello reply may also carry "word_boundary" ("leading_marker", the
// default, or "whole_token"). Returned top-k lists are renormalized over the
// listed tokens; everything else gets probability zero. Token strings are
// interned on first sight, so the client vocabulary grows as decoding runs.

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
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "hospcourse/error.hpp"
#include "hospcourse/scorer.hpp"

namespace hospcourse {

using Clock = std::chrono::steady_clock;

/// Bidirectional line-oriented byte stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(std::string_view line, Clock::time_point deadline) = 0;
  virtual std::string read_line(Clock::time_point deadline) = 0;
};

/// Line channel over a pair of file descriptors, with poll()-based deadlines.
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd) : rfd_(read_fd), wfd_(write_fd) {}
  ~FdChannel() override { close_fds(); }
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  void write_line(std::string_view line, Clock::time_point deadline) override {
    std::string buf(line);
    buf += '\n';
    std::size_t off = 0;
    while (off < buf.size()) {
      wait_for(wfd_, POLLOUT, deadline);
      const ssize_t n = ::write(wfd_, buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw Error(Errc::scorer_unavailable,
                    std::string("scorer write failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(Clock::time_point deadline) override {
    for (;;) {
      if (auto nl = buf_.find('\n'); nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      wait_for(rfd_, POLLIN, deadline);
      char chunk[4096];
      const ssize_t n = ::read(rfd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw Error(Errc::scorer_unavailable,
                    std::string("scorer read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw Error(Errc::scorer_unavailable, "scorer closed the stream");
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  void close_fds() {
    if (rfd_ >= 0) ::close(rfd_);
    if (wfd_ >= 0 && wfd_ != rfd_) ::close(wfd_);
    rfd_ = wfd_ = -1;
  }

 private:
  static void wait_for(int fd, short events, Clock::time_point deadline) {
    for (;;) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0) throw Error(Errc::timeout, "scorer did not answer in time");
      pollfd p{fd, events, 0};
      const int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r > 0) return;
      if (r == 0) throw Error(Errc::timeout, "scorer did not answer in time");
      if (errno != EINTR)
        throw Error(Errc::scorer_unavailable,
                    std::string("poll failed: ") + std::strerror(errno));
    }
  }

  int rfd_;
  int wfd_;
  std::string buf_;
};

/// Child process spawned through /bin/sh, talking over its stdin/stdout.
class ProcessChannel final : public FdChannel {
 public:
  static std::unique_ptr<ProcessChannel> spawn(const std::string& command) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0)
      throw Error(Errc::scorer_unavailable, "pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw Error(Errc::scorer_unavailable, "pipe() failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]})
        ::close(fd);
      throw Error(Errc::scorer_unavailable, "fork() failed");
    }
    if (pid == 0) {
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]})
        ::close(fd);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
    return std::unique_ptr<ProcessChannel>(
        new ProcessChannel(from_child[0], to_child[1], pid));
  }

  ~ProcessChannel() override {
    close_fds();
    // The shell may have forked the scorer, so signal the whole group.
    ::kill(-pid_, SIGTERM);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 private:
  ProcessChannel(int rfd, int wfd, pid_t pid) : FdChannel(rfd, wfd), pid_(pid) {}
  pid_t pid_;
};

/// TCP client connection.
class TcpChannel final : public FdChannel {
 public:
  static std::unique_ptr<TcpChannel> connect(const std::string& host,
                                             const std::string& port,
                                             std::chrono::milliseconds timeout) {
    ::signal(SIGPIPE, SIG_IGN);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
      throw Error(Errc::scorer_unavailable,
                  "cannot resolve " + host + ": " + ::gai_strerror(rc));
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);

    std::string last = "no addresses";
    for (auto* ai = res; ai; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC,
                              ai->ai_protocol);
      if (fd < 0) continue;
      const int flags = ::fcntl(fd, F_GETFL, 0);
      ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
      int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
      if (rc != 0 && errno == EINPROGRESS) {
        pollfd p{fd, POLLOUT, 0};
        rc = ::poll(&p, 1, static_cast<int>(timeout.count())) == 1 ? 0 : -1;
        int err = rc == 0 ? 0 : ETIMEDOUT;
        socklen_t len = sizeof err;
        if (rc == 0) ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        errno = err;
        rc = err == 0 ? 0 : -1;
      }
      if (rc == 0) {
        ::fcntl(fd, F_SETFL, flags);
        return std::unique_ptr<TcpChannel>(new TcpChannel(fd));
      }
      last = std::strerror(errno);
      ::close(fd);
    }
    throw Error(Errc::scorer_unavailable,
                "cannot connect to " + host + ":" + port + ": " + last);
  }

 private:
  explicit TcpChannel(int fd) : FdChannel(fd, fd) {}
};

struct ExternalScorerOptions {
  std::chrono::milliseconds timeout{30000};
  std::size_t top_k = 50;
  // Whitespace-token budget for the conditioning text; the tail is kept.
  std::size_t source_budget = 1024;
};

class ExternalScorer final : public TokenScorer {
 public:
  ExternalScorer(std::unique_ptr<LineChannel> channel, ExternalScorerOptions opts)
      : channel_(std::move(channel)), opts_(opts) {
    handshake();
  }

  std::size_t vocab_size() const override {
    std::lock_guard lock(mu_);
    return tokens_.size();
  }
  std::string token(TokenId id) const override {
    std::lock_guard lock(mu_);
    return tokens_.at(id);
  }
  std::optional<TokenId> find(std::string_view tok) const override {
    std::lock_guard lock(mu_);
    auto it = index_.find(std::string(tok));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  TokenId end_token() const override { return end_; }
  WordBoundary boundary() const override { return boundary_; }
  bool concurrent() const override { return false; }

  LogProbDistribution score(std::string_view source,
                            std::span<const TokenId> prefix) const override {
    std::lock_guard lock(mu_);
    nlohmann::json req;
    const auto id = next_id_++;
    req["op"] = "score";
    req["id"] = id;
    req["source"] = truncate_source(source, opts_.source_budget);
    auto& pre = req["prefix"] = nlohmann::json::array();
    for (auto t : prefix) {
      if (t >= tokens_.size())
        throw Error(Errc::unknown_token, "token id out of range: " + std::to_string(t));
      pre.push_back(tokens_[t]);
    }
    req["top_k"] = opts_.top_k;

    const auto deadline = Clock::now() + opts_.timeout;
    channel_->write_line(req.dump(), deadline);
    const auto resp = parse(channel_->read_line(deadline));

    const auto op = resp.value("op", std::string());
    if (op == "error")
      throw Error(Errc::scorer_unavailable,
                  "scorer error: " + resp.value("message", std::string("(no message)")));
    if (op != "score" || !resp.contains("id") || !resp["id"].is_number_integer() ||
        resp["id"].get<long long>() != id || !resp.contains("tokens") ||
        !resp["tokens"].is_array() || resp["tokens"].empty())
      throw Error(Errc::protocol_violation, "malformed score response: " + resp.dump());

    std::vector<std::pair<TokenId, double>> entries;
    std::set<TokenId> seen;
    for (const auto& e : resp["tokens"]) {
      if (!e.is_object() || !e.contains("t") || !e["t"].is_string() ||
          !e.contains("lp") || !e["lp"].is_number())
        throw Error(Errc::protocol_violation, "malformed token entry: " + e.dump());
      const double lp = e["lp"].get<double>();
      if (std::isnan(lp) || lp > 1e-9)
        throw Error(Errc::protocol_violation, "log-probability above zero: " + e.dump());
      const auto tid = intern(e["t"].get<std::string>());
      if (!seen.insert(tid).second)
        throw Error(Errc::protocol_violation, "duplicate token in response: " + e.dump());
      entries.emplace_back(tid, lp);
    }

    double top = kNegInf;
    for (const auto& [t, lp] : entries) top = std::max(top, lp);
    if (!std::isfinite(top))
      throw Error(Errc::protocol_violation, "response carries no probability mass");
    double z = 0.0;
    for (const auto& [t, lp] : entries) z += std::exp(lp - top);
    const double log_z = top + std::log(z);

    std::vector<double> dense(tokens_.size(), kNegInf);
    for (const auto& [t, lp] : entries) dense[t] = lp - log_z;
    return LogProbDistribution(std::move(dense));
  }

 private:
  static nlohmann::json parse(const std::string& line) {
    try {
      auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw Error(Errc::protocol_violation, "response is not an object");
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::protocol_violation, std::string("unparseable response: ") + e.what());
    }
  }

  void handshake() {
    const auto deadline = Clock::now() + opts_.timeout;
    nlohmann::json resp;
    try {
      channel_->write_line(R"({"op":"hello","version":1})", deadline);
      resp = parse(channel_->read_line(deadline));
    } catch (const Error& e) {
      throw Error(Errc::handshake_failure, std::string("handshake failed: ") + e.what(),
                  e.kind());
    }
    if (resp.value("op", std::string()) != "hello" || !resp.contains("version") ||
        resp["version"] != 1 || !resp.contains("end_token") ||
        !resp["end_token"].is_string())
      throw Error(Errc::handshake_failure, "unexpected hello reply: " + resp.dump());
    if (resp.contains("word_boundary")) {
      const auto b = resp["word_boundary"];
      if (b == "whole_token")
        boundary_ = WordBoundary::whole_token;
      else if (b != "leading_marker")
        throw Error(Errc::handshake_failure, "unknown word_boundary: " + b.dump());
    }
    end_ = intern(resp["end_token"].get<std::string>());
  }

  TokenId intern(const std::string& tok) const {
    auto [it, fresh] = index_.emplace(tok, static_cast<TokenId>(tokens_.size()));
    if (fresh) tokens_.push_back(tok);
    return it->second;
  }

  std::unique_ptr<LineChannel> channel_;
  ExternalScorerOptions opts_;
  WordBoundary boundary_ = WordBoundary::leading_marker;
  TokenId end_ = 0;

  mutable std::mutex mu_;
  mutable std::deque<std::string> tokens_;
  mutable std::unordered_map<std::string, TokenId> index_;
  mutable long long next_id_ = 1;
};

/// Opens a scorer from an endpoint string: "tcp://host:port" or
/// "exec:<shell command>".
inline std::unique_ptr<ExternalScorer> connect_external_scorer(
    std::string_view endpoint, ExternalScorerOptions opts = {}) {
  if (endpoint.starts_with("tcp://")) {
    auto hp = std::string(endpoint.substr(6));
    const auto colon = hp.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == hp.size())
      throw Error(Errc::invalid_config, "tcp endpoint needs host:port: " + hp);
    auto host = hp.substr(0, colon);
    if (host.size() > 2 && host.front() == '[' && host.back() == ']')
      host = host.substr(1, host.size() - 2);
    std::unique_ptr<LineChannel> ch;
    try {
      ch = TcpChannel::connect(host, hp.substr(colon + 1), opts.timeout);
    } catch (const Error& e) {
      throw Error(Errc::handshake_failure, e.what(), e.kind());
    }
    return std::make_unique<ExternalScorer>(std::move(ch), opts);
  }
  if (endpoint.starts_with("exec:")) {
    const auto cmd = std::string(endpoint.substr(5));
    if (text::trim(cmd).empty())
      throw Error(Errc::invalid_config, "exec endpoint has no command");
    return std::make_unique<ExternalScorer>(ProcessChannel::spawn(cmd), opts);
  }
  throw Error(Errc::invalid_config,
              "scorer endpoint must be tcp://host:port or exec:<command>: " +
                  std::string(endpoint));
}

}  // namespace hospcourse
