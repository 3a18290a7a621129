#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "mixplan/error.hpp"
#include "mixplan/workspace.hpp"

namespace mixplan {

class ServiceError : public Error {
public:
    using Error::Error;
};

struct ServeOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8765;  // 0 picks a free port
    std::uint64_t seed = 0;
    double tick_hz = 20.0;       // StateTick broadcast rate
    double time_scale = 1.0;     // simulated seconds per wall-clock second
    std::optional<std::string> log_dir;
};

/// WebSocket front end. Clients connecting to the same URL path share one session;
/// the session ends (and its event log is written) when its last client disconnects.
class Server {
public:
    /// Binds immediately; throws ServiceError when the address is unavailable.
    Server(Scenario scenario, ServeOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    unsigned short port() const;
    /// Serves on the calling thread until stop().
    void run();
    /// Serves on a background thread.
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mixplan
