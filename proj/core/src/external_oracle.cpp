#include "rfla/external_oracle.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <openssl/evp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

namespace rfla {

using nlohmann::json;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(text.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("invalid base64");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string encode_handshake(const OracleInfo& info) {
  return json{{"protocol", info.protocol}, {"num_classes", info.num_classes}, {"name", info.name}}.dump();
}

OracleInfo parse_handshake(std::string_view line) {
  try {
    const auto doc = json::parse(line);
    OracleInfo info;
    info.protocol = doc.at("protocol").get<int>();
    info.num_classes = doc.at("num_classes").get<std::size_t>();
    info.name = doc.at("name").get<std::string>();
    if (info.protocol != 1) throw OracleError("unsupported oracle protocol " + std::to_string(info.protocol));
    if (info.num_classes < 2) throw OracleError("oracle reports fewer than two classes");
    return info;
  } catch (const json::exception& e) {
    throw OracleError(std::string("malformed handshake: ") + e.what());
  }
}

std::string encode_request(std::uint64_t id, std::span<const ImageBuffer> images) {
  json payload = json::array();
  for (const auto& img : images) payload.push_back(base64_encode(encode_png(img)));
  return json{{"id", id}, {"images", std::move(payload)}}.dump();
}

OracleRequest parse_request(std::string_view line) {
  const auto doc = json::parse(line);
  OracleRequest req;
  req.id = doc.at("id").get<std::uint64_t>();
  for (const auto& item : doc.at("images")) req.images.push_back(decode_png(base64_decode(item.get<std::string>())));
  return req;
}

std::string encode_reply(const OracleReply& reply) {
  if (const auto* s = std::get_if<ScoresReply>(&reply)) return json{{"id", s->id}, {"probs", s->probs}}.dump();
  const auto& e = std::get<ErrorReply>(reply);
  return json{{"id", e.id}, {"error", e.error}}.dump();
}

OracleReply parse_reply(std::string_view line) {
  try {
    const auto doc = json::parse(line);
    const auto id = doc.at("id").get<std::uint64_t>();
    if (doc.contains("error")) return ErrorReply{id, doc.at("error").get<std::string>()};
    return ScoresReply{id, doc.at("probs").get<std::vector<std::vector<double>>>()};
  } catch (const json::exception& e) {
    throw OracleError(std::string("malformed oracle reply: ") + e.what());
  }
}

void serve_oracle(Oracle& oracle, std::istream& in, std::ostream& out) {
  out << encode_handshake(oracle.info()) << '\n' << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::uint64_t id = 0;
    try {
      id = json::parse(line).at("id").get<std::uint64_t>();
      const auto req = parse_request(line);
      ScoresReply reply{req.id, {}};
      for (auto& s : oracle.predict(req.images)) reply.probs.push_back(std::move(s.probs));
      out << encode_reply(reply) << '\n' << std::flush;
    } catch (const std::exception& e) {
      out << encode_reply(ErrorReply{id, e.what()}) << '\n' << std::flush;
    }
  }
}

namespace {

/// Line framing over a pair of file descriptors (identical for pipes and
/// sockets).
class FdTransport : public LineTransport {
 public:
  FdTransport(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {
    // Non-blocking output: a large line must not block inside write() while
    // the peer waits for us to read its replies.
    ::fcntl(write_fd_, F_SETFL, ::fcntl(write_fd_, F_GETFL) | O_NONBLOCK);
  }

  void write_line(std::string_view line) override {
    std::string data(line);
    data.push_back('\n');
    std::size_t sent = 0;
    while (sent < data.size()) {
      pollfd fds[2] = {{write_fd_, POLLOUT, 0}, {eof_ ? -1 : read_fd_, POLLIN, 0}};
      if (::poll(fds, 2, -1) < 0) {
        if (errno == EINTR) continue;
        throw OracleError(std::string("poll: ") + std::strerror(errno));
      }
      if (fds[1].revents & (POLLIN | POLLHUP)) fill_once();
      if (fds[0].revents & (POLLERR | POLLHUP)) throw OracleError("oracle closed its input");
      if (fds[0].revents & POLLOUT) {
        const ssize_t n = write_some(data.data() + sent, data.size() - sent);
        if (n < 0) {
          if (errno == EINTR || errno == EAGAIN) continue;
          throw OracleError(std::string("write to oracle: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
      }
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (eof_) throw OracleError("oracle closed the connection");
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw OracleError("timed out waiting for the oracle");
      pollfd fd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&fd, 1, static_cast<int>(left.count()));
      if (rc < 0 && errno != EINTR) throw OracleError(std::string("poll: ") + std::strerror(errno));
      if (rc > 0) fill_once();
    }
  }

 protected:
  virtual ssize_t write_some(const char* data, std::size_t n) { return ::write(write_fd_, data, n); }

  void close_fds() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    read_fd_ = write_fd_ = -1;
  }

  int read_fd_;
  int write_fd_;

 private:
  void fill_once() {
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n > 0) {
      buffer_.append(chunk, static_cast<std::size_t>(n));
    } else if (n == 0) {
      eof_ = true;
    } else if (errno != EINTR && errno != EAGAIN) {
      throw OracleError(std::string("read from oracle: ") + std::strerror(errno));
    }
  }

  std::string buffer_;
  bool eof_ = false;
};

class ProcessTransport final : public FdTransport {
 public:
  ProcessTransport(int read_fd, int write_fd, pid_t pid) : FdTransport(read_fd, write_fd), pid_(pid) {}

  ~ProcessTransport() override {
    close_fds();
    // Give the child a moment to exit on EOF before killing it.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(-pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

 private:
  pid_t pid_;
};

class SocketTransport final : public FdTransport {
 public:
  explicit SocketTransport(int fd) : FdTransport(fd, fd) {}
  ~SocketTransport() override { close_fds(); }

 protected:
  ssize_t write_some(const char* data, std::size_t n) override { return ::send(write_fd_, data, n, MSG_NOSIGNAL); }
};

}  // namespace

std::unique_ptr<LineTransport> spawn_process(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw OracleError(std::string("pipe: ") + std::strerror(errno));
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw OracleError(std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw OracleError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    // Own process group, so teardown also reaches anything the shell forks.
    ::setpgid(0, 0);
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);  // also from the parent, whichever runs first
  ::close(to_child[0]);
  ::close(from_child[1]);
  // A dead child must surface as a write error, not terminate us.
  ::signal(SIGPIPE, SIG_IGN);
  return std::make_unique<ProcessTransport>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineTransport> connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0) {
    throw OracleError("resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = found; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw OracleError("cannot connect to " + host + ":" + service);
  return std::make_unique<SocketTransport>(fd);
}

ExternalOracle::ExternalOracle(std::unique_ptr<LineTransport> transport, ExternalOracleOptions options)
    : transport_(std::move(transport)), options_(options) {
  if (options_.images_per_request == 0) throw std::invalid_argument("images_per_request must be positive");
  info_ = parse_handshake(transport_->read_line(options_.timeout));
}

std::vector<OracleScores> ExternalOracle::do_predict(std::span<const ImageBuffer> images) {
  std::map<std::uint64_t, std::pair<std::size_t, std::size_t>> pending;  // id -> [begin, end)
  for (std::size_t start = 0; start < images.size(); start += options_.images_per_request) {
    const std::size_t end = std::min(images.size(), start + options_.images_per_request);
    const std::uint64_t id = next_id_++;
    transport_->write_line(encode_request(id, images.subspan(start, end - start)));
    pending.emplace(id, std::make_pair(start, end));
  }

  // Replies still owed for this batch are skipped by later calls if we bail out.
  auto abandon = [&] {
    for (const auto& [id, range] : pending) abandoned_.insert(id);
  };

  std::vector<OracleScores> out(images.size());
  while (!pending.empty()) {
    const auto reply = parse_reply(transport_->read_line(options_.timeout));
    const std::uint64_t id = std::visit([](const auto& r) { return r.id; }, reply);
    if (abandoned_.erase(id)) continue;
    if (const auto* err = std::get_if<ErrorReply>(&reply)) {
      pending.erase(id);
      abandon();
      throw OracleError("oracle error for request " + std::to_string(err->id) + ": " + err->error);
    }
    const auto& scores = std::get<ScoresReply>(reply);
    const auto it = pending.find(scores.id);
    if (it == pending.end()) throw OracleError("reply for unknown request id " + std::to_string(scores.id));
    const auto [begin, end] = it->second;
    if (scores.probs.size() != end - begin) {
      pending.erase(it);
      abandon();
      throw OracleError("reply " + std::to_string(scores.id) + " has " + std::to_string(scores.probs.size()) +
                        " rows for " + std::to_string(end - begin) + " images");
    }
    for (std::size_t i = begin; i < end; ++i) out[i].probs = scores.probs[i - begin];
    pending.erase(it);
  }
  return out;
}

}  // namespace rfla
