#include "dragon/transport/channel.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

namespace dragon::transport {
namespace {

std::string Errno(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

sockaddr_in Resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host '" + ep.host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

void SetNoDelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

const auto kEpoch = std::chrono::steady_clock::now();

}  // namespace

double NowMs() {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - kEpoch).count();
}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    Close();
    fd_ = std::exchange(o.fd_, -1);
  }
  return *this;
}

Socket::~Socket() { Close(); }

void Socket::ShutdownWrite() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

void Socket::Close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Endpoint Endpoint::Parse(const std::string& text) {
  Endpoint ep;
  const auto colon = text.rfind(':');
  std::string port_text = text;
  if (colon != std::string::npos) {
    if (colon > 0) ep.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    const unsigned long port = std::stoul(port_text, &used);
    if (used != port_text.size() || port > 65535) throw std::invalid_argument("port");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad endpoint '" + text + "', expected host:port");
  }
  return ep;
}

std::string Endpoint::ToString() const { return host + ":" + std::to_string(port); }

Listener::Listener(const Endpoint& at) {
  sock_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!sock_.valid()) throw TransportError(Errno("socket"));
  int one = 1;
  setsockopt(sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = Resolve(at);
  if (::bind(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw TransportError(Errno(("bind " + at.ToString()).c_str()));
  }
  if (::listen(sock_.fd(), 1) != 0) throw TransportError(Errno("listen"));
  socklen_t len = sizeof addr;
  getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Socket Listener::Accept(int timeout_ms) {
  pollfd p{sock_.fd(), POLLIN, 0};
  const int rc = ::poll(&p, 1, timeout_ms);
  if (rc == 0) throw TransportError("timed out waiting for a peer");
  if (rc < 0) throw TransportError(Errno("poll"));
  Socket s(::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC));
  if (!s.valid()) throw TransportError(Errno("accept"));
  SetNoDelay(s.fd());
  return s;
}

Socket Connect(const Endpoint& to, int timeout_ms) {
  const sockaddr_in addr = Resolve(to);
  const double deadline = NowMs() + timeout_ms;
  while (true) {
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw TransportError(Errno("socket"));
    if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
      SetNoDelay(s.fd());
      return s;
    }
    if ((errno != ECONNREFUSED && errno != ENOENT && errno != EAGAIN) || NowMs() > deadline) {
      throw TransportError(Errno(("connect " + to.ToString()).c_str()));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

std::pair<Socket, Socket> SocketPair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) throw TransportError(Errno("socketpair"));
  return {Socket(fds[0]), Socket(fds[1])};
}

Channel::Channel(Socket sock, Options options) : sock_(std::move(sock)), options_(std::move(options)) {
  writer_ = std::thread([this] { WriterLoop(); });
}

Channel::~Channel() {
  {
    std::lock_guard lock(mu_);
    closing_ = true;
  }
  cv_.notify_all();
  if (writer_.joinable()) writer_.join();
}

void Channel::Send(const Message& m) {
  std::vector<std::uint8_t> frame = Encode(m, options_.codec);
  const double now = NowMs();
  {
    std::lock_guard lock(mu_);
    if (write_closed_) throw TransportError("send after close");
    double at = now + (options_.delay ? std::max(0.0, options_.delay(now)) : 0.0);
    // Keep frames in call order even when the injected delay shrinks.
    at = std::max(at, last_deliver_ms_);
    last_deliver_ms_ = at;
    queue_.push_back({at, std::move(frame)});
  }
  cv_.notify_all();
}

void Channel::CloseWrite() {
  std::unique_lock lock(mu_);
  write_closed_ = true;
  cv_.notify_all();
  cv_.wait(lock, [&] { return (queue_.empty() && !sending_) || write_failed_.load(); });
  sock_.ShutdownWrite();
}

void Channel::Abort() {
  {
    std::lock_guard lock(mu_);
    write_closed_ = true;
    write_failed_ = true;
    queue_.clear();
  }
  cv_.notify_all();
  if (sock_.valid()) ::shutdown(sock_.fd(), SHUT_RDWR);
}

void Channel::WriterLoop() {
  std::unique_lock lock(mu_);
  while (true) {
    cv_.wait(lock, [&] { return closing_ || !queue_.empty(); });
    if (queue_.empty()) return;
    const double wait_ms = queue_.front().deliver_at_ms - NowMs();
    if (wait_ms > 0.0 && !closing_) {
      cv_.wait_for(lock, std::chrono::duration<double, std::milli>(wait_ms));
      continue;
    }
    Pending p = std::move(queue_.front());
    queue_.pop_front();
    sending_ = true;
    lock.unlock();
    std::size_t off = 0;
    bool ok = !write_failed_.load();
    while (ok && off < p.frame.size()) {
      const ssize_t n = ::send(sock_.fd(), p.frame.data() + off, p.frame.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        ok = false;
        break;
      }
      off += static_cast<std::size_t>(n);
    }
    if (ok) {
      bytes_sent_ += p.frame.size();
    } else {
      write_failed_ = true;
    }
    lock.lock();
    sending_ = false;
    cv_.notify_all();
  }
}

std::optional<Message> Channel::Receive() {
  std::uint8_t buf[64 * 1024];
  while (true) {
    if (auto m = parser_.Next()) return m;
    const ssize_t n = ::recv(sock_.fd(), buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) throw TransportError(Errno("recv"));
    if (n == 0) {
      if (parser_.buffered() != 0) throw TransportError("connection closed inside a frame");
      return std::nullopt;
    }
    bytes_received_ += static_cast<std::uint64_t>(n);
    parser_.Feed({buf, static_cast<std::size_t>(n)});
  }
}

}  // namespace dragon::transport
