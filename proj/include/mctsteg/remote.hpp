#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mctsteg/environment.hpp"

namespace mctsteg::env {

/// A bidirectional line channel. read_line returns the next line without its
/// terminator and throws Timeout when nothing complete arrives in time.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(std::string_view line) = 0;
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

/// Runs `command` through /bin/sh with its stdin/stdout piped to us.
std::unique_ptr<LineChannel> spawn_process(const std::string& command);
/// host:port
std::unique_ptr<LineChannel> connect_tcp(const std::string& host, std::uint16_t port);

inline constexpr std::chrono::milliseconds kScoreTimeout{30'000};

/// Row-major little-endian f32 samples, base64.
std::string encode_samples(const PixelMatrix& img);
std::vector<float> decode_samples(std::string_view base64, std::size_t expected);

/// Client for the newline-delimited JSON scoring protocol. Performs the hello
/// handshake on construction; a serial channel, not thread-safe.
class RemoteEnvironment final : public Environment {
 public:
  explicit RemoteEnvironment(std::unique_ptr<LineChannel> channel,
                             std::chrono::milliseconds timeout = kScoreTimeout);
  double cover_confidence(const PixelMatrix& img) override;
  std::string name() const override { return name_; }
  const std::vector<std::string>& domains() const noexcept { return domains_; }

 private:
  std::unique_ptr<LineChannel> channel_;
  std::chrono::milliseconds timeout_;
  std::string name_;
  std::vector<std::string> domains_;
  std::uint64_t next_id_ = 1;
};

/// builtin:<model path> | exec:<command> | tcp:<host:port>. Throws Config on
/// an unknown form and Io when the model file is missing.
std::unique_ptr<Environment> make_environment(const std::string& spec);

}  // namespace mctsteg::env
