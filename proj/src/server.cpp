#include "msnv/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>

#include "msnv/trace_io.hpp"

namespace msnv {

namespace {

constexpr std::string_view kWebSocketGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

bool send_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n <= 0) return false;
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

std::string ws_frame(std::string_view payload, std::uint8_t opcode = 0x1) {
    std::string f;
    f.push_back(static_cast<char>(0x80 | opcode));
    const auto n = payload.size();
    if (n < 126) {
        f.push_back(static_cast<char>(n));
    } else if (n < 65536) {
        f.push_back(126);
        f.push_back(static_cast<char>((n >> 8) & 0xFF));
        f.push_back(static_cast<char>(n & 0xFF));
    } else {
        f.push_back(127);
        for (int i = 7; i >= 0; --i) f.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xFF));
    }
    f.append(payload);
    return f;
}

struct WsFrame {
    bool fin;
    std::uint8_t opcode;
    std::string payload;
};

// Pops one complete frame off the front of buf, if there is one.
std::optional<WsFrame> take_ws_frame(std::string& buf) {
    if (buf.size() < 2) return std::nullopt;
    const auto b0 = static_cast<std::uint8_t>(buf[0]);
    const auto b1 = static_cast<std::uint8_t>(buf[1]);
    std::size_t pos = 2;
    std::uint64_t len = b1 & 0x7F;
    if (len == 126) {
        if (buf.size() < 4) return std::nullopt;
        len = (static_cast<std::uint8_t>(buf[2]) << 8) | static_cast<std::uint8_t>(buf[3]);
        pos = 4;
    } else if (len == 127) {
        if (buf.size() < 10) return std::nullopt;
        len = 0;
        for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<std::uint8_t>(buf[2 + i]);
        pos = 10;
    }
    const bool masked = b1 & 0x80;
    std::uint8_t mask[4] = {0, 0, 0, 0};
    if (masked) {
        if (buf.size() < pos + 4) return std::nullopt;
        std::memcpy(mask, buf.data() + pos, 4);
        pos += 4;
    }
    if (buf.size() < pos + len) return std::nullopt;
    WsFrame f{(b0 & 0x80) != 0, static_cast<std::uint8_t>(b0 & 0x0F), buf.substr(pos, len)};
    if (masked)
        for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] = static_cast<char>(f.payload[i] ^ mask[i % 4]);
    buf.erase(0, pos + len);
    return f;
}

std::optional<std::string> header_value(std::string_view request, std::string_view name) {
    std::size_t pos = 0;
    while (pos < request.size()) {
        const auto eol = request.find("\r\n", pos);
        const auto line = request.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        const auto colon = static_cast<std::size_t>(std::find(line.begin(), line.end(), ':') - line.begin());
        if (colon < line.size()) {
            auto key = line.substr(0, colon);
            bool same = key.size() == name.size();
            for (std::size_t i = 0; same && i < key.size(); ++i)
                same = std::tolower(static_cast<unsigned char>(key[i])) == std::tolower(static_cast<unsigned char>(name[i]));
            if (same) {
                auto v = line.substr(colon + 1);
                while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
                while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
                return std::string(v);
            }
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 2;
    }
    return std::nullopt;
}

}  // namespace

std::string websocket_accept_key(const std::string& client_key) {
    const std::string src = client_key + std::string(kWebSocketGuid);
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(src.data()), src.size(), digest);
    unsigned char out[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
    const int n = EVP_EncodeBlock(out, digest, SHA_DIGEST_LENGTH);
    return std::string(reinterpret_cast<char*>(out), static_cast<std::size_t>(n));
}

SessionServer::SessionServer(ServerConfig config, std::shared_ptr<const DocumentStore> docs)
    : config_(std::move(config)), docs_(std::move(docs)) {}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(config_.port);
    if (::inet_pton(AF_INET, config_.bind_address.c_str(), &addr.sin_addr) != 1)
        throw std::runtime_error("bad bind address " + config_.bind_address);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::runtime_error("cannot listen on port " + std::to_string(config_.port) + ": " + std::strerror(errno));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    if (!config_.log_dir.empty()) std::filesystem::create_directories(config_.log_dir);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void SessionServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    {
        std::lock_guard lock(mu_);
        for (int fd : clients_) ::shutdown(fd, SHUT_RDWR);
    }
    if (acceptor_.joinable()) acceptor_.join();
    for (auto& w : workers_)
        if (w.joinable()) w.join();
    workers_.clear();
}

void SessionServer::wait() {
    if (acceptor_.joinable()) acceptor_.join();
}

void SessionServer::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        std::lock_guard lock(mu_);
        clients_.insert(fd);
        workers_.emplace_back([this, fd] { serve(fd); });
    }
}

void SessionServer::serve(int fd) {
    SessionConfig sc;
    sc.seed = config_.seed;
    sc.pipeline = config_.pipeline;
    Session session(sc, docs_);

    namespace fs = std::filesystem;
    std::ofstream trace;
    std::string trace_doc;
    if (!config_.log_dir.empty()) {
        session.set_trace_path([&](const std::string& doc_id) {
            return (fs::path(session.log().config.participant_id) / (doc_id + ".gaze")).string();
        });
        session.set_trace_sink([&](const std::string& doc_id, const GazeSample& s) {
            if (doc_id != trace_doc) {
                const auto dir = fs::path(config_.log_dir) / session.log().config.participant_id;
                fs::create_directories(dir);
                trace.close();
                trace.open(dir / (doc_id + ".gaze"));
                trace << kTraceFormat << '\n';
                trace_doc = doc_id;
            }
            trace << format_sample(s) << '\n';
        });
    }

    bool websocket = false;
    bool handshake_checked = false;
    bool closing = false;
    std::string buf;
    std::string fragments;
    char chunk[4096];

    auto deliver = [&](std::string_view line) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) return true;
        for (const auto& reply : session.handle_line(line)) {
            if (!send_all(fd, websocket ? ws_frame(reply) : reply + "\n")) return false;
        }
        if (session.phase() == Phase::Ended || session.phase() == Phase::Aborted) closing = true;
        return true;
    };

    while (!closing) {
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buf.append(chunk, static_cast<std::size_t>(n));

        if (!handshake_checked) {
            if (buf.size() < 4) continue;
            if (buf.compare(0, 4, "GET ") == 0) {
                const auto end = buf.find("\r\n\r\n");
                if (end == std::string::npos) continue;
                const auto request = buf.substr(0, end + 4);
                buf.erase(0, end + 4);
                const auto key = header_value(request, "Sec-WebSocket-Key");
                if (!key) {
                    send_all(fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
                    break;
                }
                send_all(fd, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                             "Sec-WebSocket-Accept: " + websocket_accept_key(*key) + "\r\n\r\n");
                websocket = true;
            }
            handshake_checked = true;
        }

        bool ok = true;
        if (websocket) {
            while (ok && !closing) {
                auto frame = take_ws_frame(buf);
                if (!frame) break;
                if (frame->opcode == 0x8) {
                    send_all(fd, ws_frame("", 0x8));
                    closing = true;
                } else if (frame->opcode == 0x9) {
                    ok = send_all(fd, ws_frame(frame->payload, 0xA));
                } else if (frame->opcode == 0x1 || frame->opcode == 0x0) {
                    fragments += frame->payload;
                    if (frame->fin) {
                        std::string_view msg = fragments;
                        // A frame may carry several newline-separated messages.
                        std::size_t start = 0;
                        while (ok && start <= msg.size()) {
                            const auto nl = msg.find('\n', start);
                            ok = deliver(msg.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
                            if (nl == std::string_view::npos) break;
                            start = nl + 1;
                        }
                        fragments.clear();
                    }
                }
            }
        } else {
            std::size_t nl;
            while (ok && !closing && (nl = buf.find('\n')) != std::string::npos) {
                const std::string line = buf.substr(0, nl);
                buf.erase(0, nl + 1);
                ok = deliver(line);
            }
        }
        if (!ok) break;
    }

    if (session.phase() != Phase::Ended) session.abort();
    trace.close();
    if (!config_.log_dir.empty() && !session.log().config.participant_id.empty()) {
        const auto path = fs::path(config_.log_dir) / (session.log().config.participant_id + ".msnvlog.json");
        try {
            write_log(path.string(), session.log());
        } catch (const ExportError& e) {
            std::cerr << "msnv: " << e.what() << '\n';
        }
    }
    if (session.phase() == Phase::Ended) ++completed_;
    {
        std::lock_guard lock(mu_);
        clients_.erase(fd);
    }
    ::close(fd);
}

}  // namespace msnv
