#pragma once

// In-process HTTP stub used by the remote and acceptance tests. Starts an
// httplib server on a random loopback port and tears it down on destruction.

#include <atomic>
#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>

namespace testutil {

class StubServer {
public:
    StubServer() = default;

    ~StubServer() { stop(); }

    void start() {
        port_ = server.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw std::runtime_error("stub server could not bind");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        for (int i = 0; i < 200 && !server.is_running(); ++i)
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        if (!server.is_running()) throw std::runtime_error("stub server did not start");
    }

    void stop() {
        if (thread_.joinable()) {
            server.stop();
            thread_.join();
        }
    }

    int port() const { return port_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    httplib::Server server;

private:
    int port_ = -1;
    std::thread thread_;
};

} // namespace testutil
