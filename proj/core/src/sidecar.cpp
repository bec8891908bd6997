#include "facetset/sidecar.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <map>
#include <mutex>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "facetset/corpus.hpp"
#include "facetset/errors.hpp"

extern char** environ;

namespace facetset {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

int parse_port(std::string_view s) {
  int port = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw ConfigError("bad sidecar port '" + std::string(s) + "'");
    port = port * 10 + (c - '0');
    if (port > 65535) throw ConfigError("sidecar port out of range");
  }
  if (port == 0) throw ConfigError("sidecar port missing");
  return port;
}

}  // namespace

SidecarEndpoint SidecarEndpoint::parse(std::string_view spec) {
  SidecarEndpoint ep;
  if (spec.starts_with("stdio:")) {
    ep.kind = Kind::stdio;
    ep.command = std::string(spec.substr(6));
    if (ep.command.empty()) throw ConfigError("stdio sidecar needs a command");
    return ep;
  }
  if (spec.starts_with("tcp:")) {
    ep.kind = Kind::tcp;
    auto rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon != std::string_view::npos) {
      ep.host = std::string(rest.substr(0, colon));
      rest = rest.substr(colon + 1);
    }
    ep.port = parse_port(rest);
    return ep;
  }
  throw ConfigError("sidecar endpoint must start with 'stdio:' or 'tcp:'");
}

std::string SidecarEndpoint::to_string() const {
  return kind == Kind::stdio ? "stdio:" + command : "tcp:" + host + ":" + std::to_string(port);
}

std::string slot_text(std::string_view canonical_skipgram) {
  const auto sg = SkipGram::parse(canonical_skipgram);
  std::string out;
  for (const auto& t : sg.left) out += t + " ";
  out += "[SLOT]";
  for (const auto& t : sg.right) out += " " + t;
  return out;
}

// Full-duplex line transport over a child's pipes or a TCP socket.
class SidecarClient::Channel {
 public:
  Channel(const SidecarEndpoint& ep, std::chrono::milliseconds timeout) : timeout_(timeout) {
    ignore_sigpipe();
    if (ep.kind == SidecarEndpoint::Kind::stdio) {
      spawn(ep.command);
    } else {
      connect_tcp(ep.host, ep.port);
    }
  }

  ~Channel() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (child_ > 0) {
      // Closing stdin asks the child to exit; give it a moment, then kill.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(child_, nullptr, WNOHANG) == child_) return;
        ::usleep(10000);
      }
      ::kill(child_, SIGKILL);
      ::waitpid(child_, nullptr, 0);
    }
  }

  // Writes `out` while collecting complete reply lines until `want` lines have
  // arrived. Interleaving avoids deadlock when both pipe buffers fill.
  std::vector<std::string> exchange(std::string out, std::size_t want) {
    std::vector<std::string> lines;
    std::size_t written = 0;
    auto deadline = Clock::now() + timeout_;
    while (lines.size() < want || written < out.size()) {
      pollfd fds[2];
      nfds_t nfds = 0;
      fds[nfds++] = {read_fd_, POLLIN, 0};
      const bool writing = written < out.size();
      if (writing) fds[nfds++] = {write_fd_, POLLOUT, 0};
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) throw ScorerUnavailable("sidecar timed out");
      const int rc = ::poll(fds, nfds, static_cast<int>(left));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw ScorerUnavailable(std::string("poll failed: ") + std::strerror(errno));
      }
      if (writing && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const auto n = ::write(write_fd_, out.data() + written, out.size() - written);
        if (n < 0 && errno != EAGAIN && errno != EINTR)
          throw ScorerUnavailable(std::string("sidecar write failed: ") + std::strerror(errno));
        if (n > 0) written += static_cast<std::size_t>(n);
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[65536];
        const auto n = ::read(read_fd_, buf, sizeof buf);
        if (n < 0 && errno != EAGAIN && errno != EINTR)
          throw ScorerUnavailable(std::string("sidecar read failed: ") + std::strerror(errno));
        if (n == 0) throw ScorerUnavailable("sidecar closed the connection");
        if (n > 0) {
          pending_.append(buf, static_cast<std::size_t>(n));
          std::size_t nl;
          while ((nl = pending_.find('\n')) != std::string::npos) {
            std::string line = pending_.substr(0, nl);
            pending_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) lines.push_back(std::move(line));
          }
          deadline = Clock::now() + timeout_;
        }
      }
    }
    return lines;
  }

 private:
  void spawn(const std::string& command) {
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw ScorerUnavailable("pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw ScorerUnavailable("pipe failed");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, to_child[1]);
    posix_spawn_file_actions_addclose(&actions, from_child[0]);
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const int rc = ::posix_spawn(&child_, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      child_ = -1;
      throw ScorerUnavailable("cannot spawn sidecar: " + std::string(std::strerror(rc)));
    }
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
  }

  void connect_tcp(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0)
      throw ScorerUnavailable("cannot resolve sidecar host '" + host + "'");
    int fd = -1;
    for (auto* p = res; p; p = p->ai_next) {
      fd = ::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw ScorerUnavailable("cannot connect to sidecar at " + host + ":" + std::to_string(port));
    read_fd_ = write_fd_ = fd;
  }

  std::chrono::milliseconds timeout_;
  int read_fd_ = -1;
  int write_fd_ = -1;
  pid_t child_ = -1;
  std::string pending_;
};

namespace {

nlohmann::json parse_reply(const std::string& line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ProtocolError("malformed sidecar reply", line);
  return j;
}

}  // namespace

SidecarClient::SidecarClient(const SidecarEndpoint& endpoint, std::chrono::milliseconds timeout)
    : channel_(std::make_unique<Channel>(endpoint, timeout)) {
  const nlohmann::json hello = {{"type", "hello"}, {"protocol", kSidecarProtocol}};
  const auto lines = channel_->exchange(hello.dump() + "\n", 1);
  const auto reply = parse_reply(lines.front());
  if (reply["type"] != "ready" || !reply.contains("max_top_k") || !reply["max_top_k"].is_number_integer())
    throw ProtocolError("expected ready reply", lines.front());
  model_ = reply.value("model", std::string("unknown"));
  max_top_k_ = reply["max_top_k"].get<int>();
  if (max_top_k_ < 1) throw ProtocolError("max_top_k must be positive", lines.front());
}

SidecarClient::~SidecarClient() = default;

BatchReply SidecarClient::score(std::span<const std::string> texts, int top_k) {
  BatchReply out(texts.size());
  if (texts.empty()) return out;
  const int k = std::max(1, std::min(top_k, max_top_k_));
  std::map<long long, std::size_t> pending;
  std::string payload;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const long long id = next_id_++;
    pending.emplace(id, i);
    payload += nlohmann::json{{"type", "score"}, {"id", id}, {"text", texts[i]}, {"top_k", k}}.dump();
    payload += '\n';
  }
  const auto lines = channel_->exchange(std::move(payload), texts.size());
  for (const auto& line : lines) {
    const auto j = parse_reply(line);
    if (!j.contains("id") || !j["id"].is_number_integer()) throw ProtocolError("reply without id", line);
    const auto it = pending.find(j["id"].get<long long>());
    if (it == pending.end()) throw ProtocolError("reply id matches no pending request", line);
    const std::size_t slot = it->second;
    pending.erase(it);
    if (j["type"] == "error") continue;
    if (j["type"] != "scores" || !j.contains("tokens") || !j["tokens"].is_array())
      throw ProtocolError("expected scores reply", line);
    TokenDistribution dist;
    double sum = 0.0;
    for (const auto& pair : j["tokens"]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_number())
        throw ProtocolError("token entry must be [string, number]", line);
      const double p = pair[1].get<double>();
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) throw ProtocolError("probability out of range", line);
      sum += p;
      dist.emplace_back(pair[0].get<std::string>(), p);
    }
    if (sum > 1.0 + 1e-6) throw ProtocolError("probabilities sum above 1", line);
    if (dist.size() > static_cast<std::size_t>(k)) throw ProtocolError("more tokens than top_k", line);
    out[slot] = std::move(dist);
  }
  return out;
}

}  // namespace facetset
