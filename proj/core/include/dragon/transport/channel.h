#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dragon/transport/wire.h"

namespace dragon::transport {

/// Connection-level failure: reset, EOF inside a frame, refused connect.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void ShutdownWrite();
  void Close();

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// "host:port"; a bare ":port" or "port" means 127.0.0.1.
  static Endpoint Parse(const std::string& text);
  std::string ToString() const;
};

class Listener {
 public:
  /// Port 0 picks a free port.
  explicit Listener(const Endpoint& at);
  std::uint16_t port() const { return port_; }
  /// Blocks for one peer; throws TransportError after `timeout_ms`.
  Socket Accept(int timeout_ms = 30000);

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

/// Retries refused connections until `timeout_ms` elapses.
Socket Connect(const Endpoint& to, int timeout_ms = 30000);

/// Connected AF_UNIX stream pair, for in-process tests.
std::pair<Socket, Socket> SocketPair();

/// Milliseconds on the process-wide steady clock.
double NowMs();

/// One-way delay injected on the sending side, as a function of send time.
using DelayFn = std::function<double(double now_ms)>;

/// Framed full-duplex channel over a stream socket. Send() enqueues to a
/// dedicated writer thread (frames leave in call order); Receive() blocks
/// for the next whole frame.
class Channel {
 public:
  struct Options {
    Codec codec = Codec::kNone;
    DelayFn delay;  // empty: no injected latency
  };

  Channel(Socket sock, Options options);
  explicit Channel(Socket sock) : Channel(std::move(sock), Options{}) {}
  ~Channel();
  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  void Send(const Message& m);
  /// nullopt on orderly close at a frame boundary. Throws TransportError on
  /// reset or close inside a frame, WireFormatError on a bad frame.
  std::optional<Message> Receive();
  /// Drains queued frames, then half-closes the write side.
  void CloseWrite();
  /// Shuts both directions down; unblocks a pending Receive().
  void Abort();

  std::uint64_t bytes_sent() const { return bytes_sent_.load(); }
  std::uint64_t bytes_received() const { return bytes_received_.load(); }
  /// Set once the writer hit a socket error.
  bool write_failed() const { return write_failed_.load(); }

 private:
  struct Pending {
    double deliver_at_ms;
    std::vector<std::uint8_t> frame;
  };

  void WriterLoop();

  Socket sock_;
  Options options_;
  FrameParser parser_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Pending> queue_;
  double last_deliver_ms_ = 0.0;
  bool closing_ = false;
  bool write_closed_ = false;
  bool sending_ = false;

  std::atomic<std::uint64_t> bytes_sent_{0};
  std::atomic<std::uint64_t> bytes_received_{0};
  std::atomic<bool> write_failed_{false};
  std::thread writer_;
};

}  // namespace dragon::transport
