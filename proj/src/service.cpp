#include "sentinel/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <json.hpp>

#include "sentinel/bundle.hpp"
#include "sentinel/error.hpp"
#include "sentinel/json_codec.hpp"

namespace sentinel {

using nlohmann::json;

namespace {

std::int64_t steady_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(steady_clock::now().time_since_epoch()).count();
}

std::string error_response(const std::string& code, const std::string& message, const std::string& line) {
    constexpr std::size_t kEchoLimit = 256;
    json r;
    r["ok"] = false;
    r["error"] = {{"code", code},
                  {"message", message},
                  {"line", line.size() > kEchoLimit ? line.substr(0, kEchoLimit) + "..." : line}};
    return r.dump(-1, ' ', false, json::error_handler_t::replace);
}

json probs_json(const ClassProbabilities& p) { return p.values(); }

}  // namespace

InferenceService::InferenceService(TrainedPipeline pipeline, Clock clock)
    : pipeline_(std::move(pipeline)), clock_(clock ? std::move(clock) : Clock(steady_ms)) {}

std::shared_ptr<InferenceService::Stream> InferenceService::stream(const std::string& id, std::int64_t now) {
    std::lock_guard lock(registry_mutex_);
    for (auto it = streams_.begin(); it != streams_.end();) {
        std::lock_guard s(it->second->mutex);
        if (it->first != id && now - it->second->last_seen_ms > kStreamIdleEvictMs) {
            it = streams_.erase(it);
        } else {
            ++it;
        }
    }
    auto& slot = streams_[id];
    if (!slot) {
        slot = std::make_shared<Stream>();
        slot->last_seen_ms = now;
    } else if (now - slot->last_seen_ms > kStreamIdleEvictMs) {
        std::lock_guard s(slot->mutex);
        slot->state = {};
    }
    return slot;
}

std::size_t InferenceService::stream_count() const {
    std::lock_guard lock(registry_mutex_);
    return streams_.size();
}

std::size_t InferenceService::evict_idle() {
    const std::int64_t now = clock_();
    std::lock_guard lock(registry_mutex_);
    std::size_t removed = 0;
    for (auto it = streams_.begin(); it != streams_.end();) {
        std::lock_guard s(it->second->mutex);
        if (now - it->second->last_seen_ms > kStreamIdleEvictMs) {
            it = streams_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

std::string InferenceService::handle_line(const std::string& line) {
    json request;
    try {
        request = json::parse(line);
    } catch (const json::parse_error& e) {
        return error_response("malformed_json", e.what(), line);
    }
    if (!request.is_object()) return error_response("malformed_json", "request must be a JSON object", line);
    const auto sid = request.find("stream_id");
    if (sid == request.end() || !sid->is_string() || sid->get<std::string>().empty()) {
        return error_response("invalid_request", "missing non-empty string field stream_id", line);
    }
    const auto fj = request.find("frame");
    if (fj == request.end()) return error_response("invalid_request", "missing field frame", line);

    Frame frame;
    try {
        frame = frame_from_json(*fj);
        validate_frame(frame);
    } catch (const Error& e) {
        return error_response("invalid_frame", e.what(), line);
    }

    try {
        const std::string stream_id = sid->get<std::string>();
        const ClassProbabilities raw = pipeline_.classify(pipeline_.prepare(frame));
        std::optional<AeFlag> flag;
        if (pipeline_.config.variant.autoencoder) flag = detect(*pipeline_.autoencoder, pipeline_.threshold, frame);

        ClassProbabilities smoothed = raw;
        {
            const std::int64_t now = clock_();
            auto s = stream(stream_id, now);
            std::lock_guard lock(s->mutex);
            s->last_seen_ms = now;
            if (pipeline_.config.variant.smooth) {
                auto [next, out] = smooth_step(std::move(s->state), raw, frame.timestamp_ms);
                s->state = std::move(next);
                smoothed = out;
            }
        }
        const ClassLabel final_class = flag ? vote(smoothed, *flag) : smoothed.argmax();

        json r;
        r["ok"] = true;
        r["stream_id"] = stream_id;
        r["raw"] = probs_json(raw);
        r["smoothed"] = probs_json(smoothed);
        r["classifier_class"] = raw.argmax().id();
        r["ae_flag"] = flag ? json(to_string(*flag)) : json(nullptr);
        r["final_class"] = final_class.id();
        r["bundle_version"] = kBundleVersion;
        return r.dump();
    } catch (const std::exception& e) {
        return error_response("internal", e.what(), line);
    }
}

TcpServer::TcpServer(InferenceService& service) : service_(service) {}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start(std::uint16_t port, const std::string& host) {
    if (running_) throw Error("server already running");
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    const int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw Error("invalid listen address " + host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
        const std::string why = std::strerror(errno);
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw Error("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpServer::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            break;
        }
        std::lock_guard lock(connections_mutex_);
        if (!running_) {
            ::close(fd);
            break;
        }
        open_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

namespace {

bool send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            return false;
        }
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

}  // namespace

void TcpServer::serve_connection(int fd) {
    std::string buffer;
    char chunk[65536];
    bool open = true;
    while (open && running_) {
        const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t pos;
        while ((pos = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, pos);
            buffer.erase(0, pos + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (!send_all(fd, service_.handle_line(line) + "\n")) {
                open = false;
                break;
            }
        }
    }
    std::lock_guard lock(connections_mutex_);
    const auto it = std::find(open_fds_.begin(), open_fds_.end(), fd);
    if (it != open_fds_.end()) {
        open_fds_.erase(it);
        ::close(fd);
    }
}

void TcpServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(connections_mutex_);
        for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& w : workers) w.join();
}

LineClient::LineClient(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
        ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        const std::string why = std::strerror(errno);
        ::close(fd_);
        throw Error("cannot connect to " + host + ":" + std::to_string(port) + ": " + why);
    }
}

LineClient::~LineClient() {
    if (fd_ >= 0) ::close(fd_);
}

std::string LineClient::request(const std::string& line) {
    if (!send_all(fd_, line + "\n")) throw Error("connection closed while sending");
    char chunk[65536];
    std::size_t pos;
    while ((pos = buffer_.find('\n')) == std::string::npos) {
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw Error("connection closed before a response arrived");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
    std::string out = buffer_.substr(0, pos);
    buffer_.erase(0, pos + 1);
    return out;
}

}  // namespace sentinel
