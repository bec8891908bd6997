#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace facetset {

inline constexpr int kSidecarProtocol = 1;

// Where the masked-language-model sidecar lives:
//   "stdio:<shell command>"   spawn the command, talk over its stdin/stdout
//   "tcp:<host>:<port>" or "tcp:<port>"   connect to a listening sidecar
struct SidecarEndpoint {
  enum class Kind { stdio, tcp };
  Kind kind = Kind::stdio;
  std::string command;
  std::string host = "127.0.0.1";
  int port = 0;

  static SidecarEndpoint parse(std::string_view spec);
  std::string to_string() const;
};

using TokenDistribution = std::vector<std::pair<std::string, double>>;

// One reply per request text, index-aligned with the input. A request the
// sidecar answered with an error reply comes back as nullopt.
using BatchReply = std::vector<std::optional<TokenDistribution>>;

// Newline-delimited JSON client. Requests are pipelined with correlation
// ids, so replies may arrive in any order.
//
//   -> {"type":"hello","protocol":1}
//   <- {"type":"ready","model":"...","max_top_k":N}
//   -> {"type":"score","id":7,"text":"left [SLOT] right","top_k":K}
//   <- {"type":"scores","id":7,"tokens":[["tok",p],...]}
//   <- {"type":"error","id":7,"message":"..."}
//
// Transport failures throw ScorerUnavailable; malformed replies throw
// ProtocolError. SIGPIPE is ignored process-wide once a client exists.
class SidecarClient {
 public:
  explicit SidecarClient(const SidecarEndpoint& endpoint,
                         std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
  ~SidecarClient();
  SidecarClient(const SidecarClient&) = delete;
  SidecarClient& operator=(const SidecarClient&) = delete;

  const std::string& model() const noexcept { return model_; }
  int max_top_k() const noexcept { return max_top_k_; }

  BatchReply score(std::span<const std::string> texts, int top_k);

 private:
  class Channel;
  std::unique_ptr<Channel> channel_;
  std::string model_;
  int max_top_k_ = 0;
  long long next_id_ = 1;
};

// "left tokens [SLOT] right tokens", the text sent for a skip-gram.
std::string slot_text(std::string_view canonical_skipgram);

}  // namespace facetset
