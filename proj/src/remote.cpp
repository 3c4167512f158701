#include "mctsteg/remote.hpp"

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sodium.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <json.hpp>

namespace mctsteg::env {

namespace {

using Json = nlohmann::json;

class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}
  ~FdChannel() override { close_fds(); }

  void write_line(std::string_view line) override {
    std::string out(line);
    out.push_back('\n');
    std::size_t done = 0;
    while (done < out.size()) {
      const ssize_t n = send_bytes(out.data() + done, out.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::Io, std::string("environment channel write failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
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
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw Error(Errc::Timeout, "environment did not answer in time");
      pollfd p{read_fd_, POLLIN, 0};
      const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::Io, std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::Io, std::string("environment channel read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw Error(Errc::Protocol, "environment closed the channel");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  virtual ssize_t send_bytes(const char* data, std::size_t size) { return ::write(write_fd_, data, size); }

  void close_fds() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    read_fd_ = write_fd_ = -1;
  }

  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

class ProcessChannel final : public FdChannel {
 public:
  ProcessChannel(pid_t pid, int read_fd, int write_fd) : FdChannel(read_fd, write_fd), pid_(pid) {}
  ~ProcessChannel() override {
    // Closing stdin asks the server to exit; give it a moment, then insist.
    if (write_fd_ >= 0) {
      ::close(write_fd_);
      write_fd_ = -1;
    }
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) return;
      ::usleep(10'000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }

 private:
  pid_t pid_;
};

class SocketChannel final : public FdChannel {
 public:
  explicit SocketChannel(int fd) : FdChannel(fd, fd) {}

 protected:
  ssize_t send_bytes(const char* data, std::size_t size) override { return ::send(write_fd_, data, size, MSG_NOSIGNAL); }
};

Json parse_line(const std::string& line) {
  Json j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::Protocol, "environment sent malformed JSON: " + line);
  return j;
}

}  // namespace

std::unique_ptr<LineChannel> spawn_process(const std::string& command) {
  // A server that dies mid-request must surface as an error, not kill us.
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw Error(Errc::Io, "pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw Error(Errc::Io, "pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::Io, "fork failed");
  if (pid == 0) {
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
  return std::make_unique<ProcessChannel>(pid, from_child[0], to_child[1]);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0) {
    throw Error(Errc::Io, "cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* a = found; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw Error(Errc::Io, "cannot connect to " + host + ":" + service);
  return std::make_unique<SocketChannel>(fd);
}

std::string encode_samples(const PixelMatrix& img) {
  std::string raw;
  raw.reserve(img.data.size() * 4);
  for (double v : img.data.values()) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) raw.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
  }
  std::string out(sodium_base64_ENCODED_LEN(raw.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), reinterpret_cast<const unsigned char*>(raw.data()), raw.size(),
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<float> decode_samples(std::string_view base64, std::size_t expected) {
  std::string raw(base64.size() / 4 * 3 + 3, '\0');
  std::size_t len = 0;
  if (sodium_base642bin(reinterpret_cast<unsigned char*>(raw.data()), raw.size(), base64.data(), base64.size(),
                        nullptr, &len, nullptr, sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw Error(Errc::Protocol, "invalid base64 sample data");
  }
  if (len != expected * 4) throw Error(Errc::DimensionMismatch, "sample data length does not match the dimensions");
  std::vector<float> out(expected);
  for (std::size_t k = 0; k < expected; ++k) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * k + b])) << (8 * b);
    out[k] = std::bit_cast<float>(bits);
  }
  return out;
}

RemoteEnvironment::RemoteEnvironment(std::unique_ptr<LineChannel> channel, std::chrono::milliseconds timeout)
    : channel_(std::move(channel)), timeout_(timeout) {
  channel_->write_line(R"({"op":"hello"})");
  const Json hello = parse_line(channel_->read_line(timeout_));
  if (!hello.contains("name") || !hello["name"].is_string() || !hello.contains("domains") ||
      !hello["domains"].is_array()) {
    throw Error(Errc::Protocol, "hello response lacks name or domains");
  }
  name_ = hello["name"].get<std::string>();
  for (const auto& d : hello["domains"]) {
    if (!d.is_string()) throw Error(Errc::Protocol, "hello domains must be strings");
    domains_.push_back(d.get<std::string>());
  }
}

double RemoteEnvironment::cover_confidence(const PixelMatrix& img) {
  const std::string domain = img.domain == Domain::Spatial ? "spatial" : "jpeg";
  if (std::find(domains_.begin(), domains_.end(), domain) == domains_.end()) {
    throw Error(Errc::DomainMismatch, "environment " + name_ + " does not score " + domain + " input");
  }
  const std::uint64_t id = next_id_++;
  const Json request = {{"op", "score"},        {"id", id},
                        {"domain", domain},     {"width", img.width()},
                        {"height", img.height()}, {"data", encode_samples(img)}};
  channel_->write_line(request.dump());
  const Json response = parse_line(channel_->read_line(timeout_));
  if (response.contains("error")) throw Error(Errc::Protocol, "environment error: " + response["error"].dump());
  if (!response.contains("id") || !response["id"].is_number_unsigned() || response["id"].get<std::uint64_t>() != id) {
    throw Error(Errc::Protocol, "environment response id does not match request " + std::to_string(id));
  }
  if (!response.contains("cover_confidence") || !response["cover_confidence"].is_number()) {
    throw Error(Errc::Protocol, "environment response lacks cover_confidence");
  }
  const double c = response["cover_confidence"].get<double>();
  if (!(c >= 0.0 && c <= 1.0)) throw Error(Errc::Protocol, "cover_confidence outside [0,1]");
  return c;
}

std::unique_ptr<Environment> make_environment(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(Errc::Config, "environment must be builtin:<path>, exec:<cmd> or tcp:<host:port>");
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (arg.empty()) throw Error(Errc::Config, "empty environment argument in '" + spec + "'");
  if (kind == "builtin") {
    if (!std::filesystem::exists(arg)) throw Error(Errc::Config, "environment model not found: " + arg);
    return std::make_unique<BuiltinEnvironment>(std::make_shared<const LinearModel>(load_model(arg)));
  }
  if (kind == "exec") return std::make_unique<RemoteEnvironment>(spawn_process(arg));
  if (kind == "tcp") {
    const auto sep = arg.rfind(':');
    if (sep == std::string::npos || sep == 0) throw Error(Errc::Config, "tcp environment needs host:port");
    int port = 0;
    try {
      std::size_t used = 0;
      port = std::stoi(arg.substr(sep + 1), &used);
      if (used != arg.size() - sep - 1) port = 0;
    } catch (const std::exception&) {
      port = 0;
    }
    if (port <= 0 || port > 65535) throw Error(Errc::Config, "invalid tcp port in '" + arg + "'");
    return std::make_unique<RemoteEnvironment>(connect_tcp(arg.substr(0, sep), static_cast<std::uint16_t>(port)));
  }
  throw Error(Errc::Config, "unknown environment kind '" + kind + "'");
}

}  // namespace mctsteg::env
