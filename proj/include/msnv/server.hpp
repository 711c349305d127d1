#pragma once

// TCP front end for study sessions. Each connection carries one session,
// either as raw newline-delimited JSON or, when the first bytes are an HTTP
// upgrade request, as WebSocket text frames (one message per frame).

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "msnv/session.hpp"

namespace msnv {

struct ServerConfig {
    std::string bind_address = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks a free port
    std::uint64_t seed = 0;
    PipelineConfig pipeline;
    std::string log_dir;  // empty disables log and trace files
};

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept_key(const std::string& client_key);

class SessionServer {
public:
    SessionServer(ServerConfig config, std::shared_ptr<const DocumentStore> docs);
    ~SessionServer();
    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    /// Binds and starts accepting on a background thread.
    void start();
    void stop();
    /// Blocks until stop() is called from elsewhere.
    void wait();

    std::uint16_t port() const { return port_; }
    std::size_t completed_sessions() const { return completed_.load(); }

private:
    void accept_loop();
    void serve(int fd);

    ServerConfig config_;
    std::shared_ptr<const DocumentStore> docs_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::atomic<std::size_t> completed_{0};
    std::thread acceptor_;
    std::mutex mu_;
    std::set<int> clients_;
    std::vector<std::thread> workers_;
};

}  // namespace msnv
