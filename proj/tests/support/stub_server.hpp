#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>

namespace hykge::testing {

/// httplib server on a free local port, serving on a background thread.
class StubServer {
public:
    StubServer() = default;
    ~StubServer() { stop(); }

    httplib::Server& server() { return server_; }

    void start() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw std::runtime_error("stub server could not bind");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace hykge::testing
