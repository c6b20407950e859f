#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rfla/oracle.hpp"

namespace rfla {

// Newline-delimited JSON oracle protocol.
//
//   oracle -> client, once:  {"protocol":1,"num_classes":K,"name":"..."}
//   client -> oracle:        {"id":N,"images":["<base64 PNG>", ...]}
//   oracle -> client:        {"id":N,"probs":[[p_0..p_K-1], ...]}  one row per image
//                         or {"id":N,"error":"..."}

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_handshake(const OracleInfo& info);
/// Throws OracleError on a malformed handshake.
OracleInfo parse_handshake(std::string_view line);

struct OracleRequest {
  std::uint64_t id = 0;
  std::vector<ImageBuffer> images;
};
std::string encode_request(std::uint64_t id, std::span<const ImageBuffer> images);
OracleRequest parse_request(std::string_view line);

struct ScoresReply {
  std::uint64_t id = 0;
  std::vector<std::vector<double>> probs;
};
struct ErrorReply {
  std::uint64_t id = 0;
  std::string error;
};
using OracleReply = std::variant<ScoresReply, ErrorReply>;

std::string encode_reply(const OracleReply& reply);
/// Throws OracleError on anything that is not a well-formed reply.
OracleReply parse_reply(std::string_view line);

/// Answers protocol requests from `in` with `oracle` until end of input.
/// Requests that fail to decode get an error reply; the session continues.
void serve_oracle(Oracle& oracle, std::istream& in, std::ostream& out);

/// Bidirectional line channel to an external oracle.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  /// Sends `line` plus a newline. While blocked on output, pending input is
  /// buffered so a peer that is busy writing replies cannot deadlock us.
  virtual void write_line(std::string_view line) = 0;
  /// Next line without its terminator. Throws OracleError on timeout or EOF.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

/// Runs `command` through /bin/sh and talks to its stdin/stdout.
std::unique_ptr<LineTransport> spawn_process(const std::string& command);
/// Connects to host:port over TCP.
std::unique_ptr<LineTransport> connect_tcp(const std::string& host, std::uint16_t port);

struct ExternalOracleOptions {
  std::chrono::milliseconds timeout{60000};
  std::size_t images_per_request = 64;
};

/// Client side of the protocol. The handshake is read on construction;
/// predict() sends all requests of a batch before collecting replies, which
/// are matched by id.
class ExternalOracle final : public Oracle {
 public:
  explicit ExternalOracle(std::unique_ptr<LineTransport> transport, ExternalOracleOptions options = {});

  OracleInfo info() const override { return info_; }

 protected:
  std::vector<OracleScores> do_predict(std::span<const ImageBuffer> images) override;

 private:
  std::unique_ptr<LineTransport> transport_;
  ExternalOracleOptions options_;
  OracleInfo info_;
  std::uint64_t next_id_ = 1;
  std::set<std::uint64_t> abandoned_;
};

}  // namespace rfla
