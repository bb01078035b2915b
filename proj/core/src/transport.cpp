#include "catsim/parengine.hpp"

#include "catsim/errors.hpp"

#include <algorithm>
#include <barrier>
#include <cstring>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

namespace catsim {

namespace {

// Shared-slot exchange: every worker publishes its outgoing payloads, a
// barrier separates publishing from collection, and a second barrier keeps
// the next round from overwriting slots that are still being read.
class InProcessTransport : public Transport {
public:
  InProcessTransport(int p, std::vector<std::vector<DomainId>> neighbors)
      : neighbors_(std::move(neighbors)),
        slots_(p, std::vector<std::vector<std::uint8_t>>(p)),
        barrier_(p) {}

  std::map<DomainId, std::vector<std::uint8_t>> exchange(
      DomainId self,
      const std::map<DomainId, std::vector<std::uint8_t>>& out) override {
    std::uint64_t sent_bytes = 0;
    for (const auto& [dst, payload] : out) {
      slots_[self][dst] = payload;
      sent_bytes += payload.size();
    }
    count(out.size(), sent_bytes);
    barrier_.arrive_and_wait();
    std::map<DomainId, std::vector<std::uint8_t>> in;
    for (DomainId nb : neighbors_[self]) in[nb] = std::move(slots_[nb][self]);
    barrier_.arrive_and_wait();
    return in;
  }

  void abandon(DomainId) override { barrier_.arrive_and_drop(); }

private:
  std::vector<std::vector<DomainId>> neighbors_;
  std::vector<std::vector<std::vector<std::uint8_t>>> slots_;
  std::barrier<> barrier_;
};

void write_all(int fd, const void* data, std::size_t n) {
  const char* p = static_cast<const char*>(data);
  while (n > 0) {
    const ssize_t k = ::write(fd, p, n);
    if (k <= 0) throw InternalError("socket transport: write failed");
    p += k;
    n -= static_cast<std::size_t>(k);
  }
}

void read_all(int fd, void* data, std::size_t n) {
  char* p = static_cast<char*>(data);
  while (n > 0) {
    const ssize_t k = ::read(fd, p, n);
    if (k <= 0) throw InternalError("socket transport: read failed");
    p += k;
    n -= static_cast<std::size_t>(k);
  }
}

// Real sockets over 127.0.0.1, one connection per neighbour pair, frames
// length-prefixed. Everyone writes all frames before reading; payloads are
// small against socket buffers, so the round cannot deadlock.
class TcpLoopbackTransport : public Transport {
public:
  TcpLoopbackTransport(int p, std::vector<std::vector<DomainId>> neighbors)
      : neighbors_(std::move(neighbors)),
        fds_(p, std::vector<int>(p, -1)) {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw InternalError("socket transport: cannot create listener");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listener, 64) != 0) {
      ::close(listener);
      throw InternalError("socket transport: bind/listen failed");
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);

    for (int a = 0; a < p; ++a) {
      for (DomainId b : neighbors_[a]) {
        if (b <= a) continue;
        const int client = ::socket(AF_INET, SOCK_STREAM, 0);
        if (client < 0 || ::connect(client, reinterpret_cast<sockaddr*>(&addr),
                                    sizeof(addr)) != 0) {
          ::close(listener);
          throw InternalError("socket transport: connect failed");
        }
        const int server = ::accept(listener, nullptr, nullptr);
        if (server < 0) {
          ::close(listener);
          throw InternalError("socket transport: accept failed");
        }
        int one = 1;
        ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        ::setsockopt(server, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        fds_[a][b] = client;
        fds_[b][a] = server;
      }
    }
    ::close(listener);
  }

  ~TcpLoopbackTransport() override {
    for (auto& row : fds_)
      for (int fd : row)
        if (fd >= 0) ::close(fd);
  }

  std::map<DomainId, std::vector<std::uint8_t>> exchange(
      DomainId self,
      const std::map<DomainId, std::vector<std::uint8_t>>& out) override {
    std::uint64_t sent_bytes = 0;
    for (const auto& [dst, payload] : out) {
      const std::uint32_t n = static_cast<std::uint32_t>(payload.size());
      std::uint8_t hdr[4] = {static_cast<std::uint8_t>(n & 0xff),
                             static_cast<std::uint8_t>((n >> 8) & 0xff),
                             static_cast<std::uint8_t>((n >> 16) & 0xff),
                             static_cast<std::uint8_t>((n >> 24) & 0xff)};
      write_all(fds_[self][dst], hdr, 4);
      if (n > 0) write_all(fds_[self][dst], payload.data(), n);
      sent_bytes += n;
    }
    count(out.size(), sent_bytes);
    std::map<DomainId, std::vector<std::uint8_t>> in;
    for (DomainId nb : neighbors_[self]) {
      std::uint8_t hdr[4];
      read_all(fds_[self][nb], hdr, 4);
      const std::uint32_t n = static_cast<std::uint32_t>(hdr[0]) |
                              (static_cast<std::uint32_t>(hdr[1]) << 8) |
                              (static_cast<std::uint32_t>(hdr[2]) << 16) |
                              (static_cast<std::uint32_t>(hdr[3]) << 24);
      std::vector<std::uint8_t> payload(n);
      if (n > 0) read_all(fds_[self][nb], payload.data(), n);
      in[nb] = std::move(payload);
    }
    return in;
  }

  void abandon(DomainId self) override {
    for (int& fd : fds_[self])
      if (fd >= 0) {
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
        fd = -1;
      }
  }

private:
  std::vector<std::vector<DomainId>> neighbors_;
  std::vector<std::vector<int>> fds_;
};

} // namespace

std::unique_ptr<Transport> make_transport(
    TransportKind kind, int p,
    const std::vector<std::vector<DomainId>>& neighbors) {
  switch (kind) {
    case TransportKind::InProcess:
      return std::make_unique<InProcessTransport>(p, neighbors);
    case TransportKind::TcpLoopback:
      return std::make_unique<TcpLoopbackTransport>(p, neighbors);
  }
  throw InternalError("unknown transport kind");
}

} // namespace catsim
