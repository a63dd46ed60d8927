#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sentinel/pipeline.hpp"

namespace sentinel {

inline constexpr std::int64_t kStreamIdleEvictMs = 5 * 60 * 1000;

// Stateful request handler: one smoothing buffer per stream id, evicted after
// five idle minutes. Thread-safe.
class InferenceService {
public:
    using Clock = std::function<std::int64_t()>;  // milliseconds, monotone

    explicit InferenceService(TrainedPipeline pipeline, Clock clock = {});

    // One request line in, one response line out (no trailing newline).
    // Never throws for bad input; errors come back as {"ok": false, ...}.
    std::string handle_line(const std::string& line);

    std::size_t stream_count() const;
    // Drops streams idle for longer than five minutes; returns how many.
    std::size_t evict_idle();

    const TrainedPipeline& pipeline() const noexcept { return pipeline_; }

private:
    struct Stream {
        std::mutex mutex;
        SmootherState state;
        std::int64_t last_seen_ms = 0;
    };

    std::shared_ptr<Stream> stream(const std::string& id, std::int64_t now);

    TrainedPipeline pipeline_;
    Clock clock_;
    mutable std::mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<Stream>> streams_;
};

// Newline-delimited JSON over TCP, one thread per connection.
class TcpServer {
public:
    explicit TcpServer(InferenceService& service);
    ~TcpServer();

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    // Binds 127.0.0.1:port (0 picks a free port) and starts accepting.
    void start(std::uint16_t port, const std::string& host = "127.0.0.1");
    std::uint16_t port() const noexcept { return port_; }
    // Stops accepting, closes open connections and joins every thread.
    void stop();
    bool running() const noexcept { return running_; }

private:
    void accept_loop();
    void serve_connection(int fd);

    InferenceService& service_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex connections_mutex_;
    std::vector<int> open_fds_;
    std::vector<std::thread> workers_;
};

// Minimal blocking line client used by the CLI and tests.
class LineClient {
public:
    LineClient(const std::string& host, std::uint16_t port);
    ~LineClient();
    LineClient(const LineClient&) = delete;
    LineClient& operator=(const LineClient&) = delete;

    std::string request(const std::string& line);

private:
    int fd_ = -1;
    std::string buffer_;
};

}  // namespace sentinel
