#include "mixplan/service.hpp"

#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "mixplan/session.hpp"

namespace mixplan {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Group;

class Connection : public std::enable_shared_from_this<Connection> {
public:
    explicit Connection(tcp::socket socket) : ws_(std::move(socket)) {}

    void start(std::function<std::shared_ptr<Group>(const std::string&)> join);
    void send(std::shared_ptr<const std::string> text);
    void close();

private:
    void read();
    void write();
    void on_message(const std::string& text);
    void leave();

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> request_;
    std::deque<std::shared_ptr<const std::string>> queue_;
    std::shared_ptr<Group> group_;
    bool closed_ = false;
};

class Group : public std::enable_shared_from_this<Group> {
public:
    Group(asio::io_context& ioc, std::string name, const Scenario& scenario, const ServeOptions& opt,
          std::function<void(const std::string&)> on_empty)
        : name_(std::move(name)),
          session_(scenario, opt.seed),
          opt_(opt),
          timer_(ioc),
          on_empty_(std::move(on_empty)) {}

    void start() {
        last_ = std::chrono::steady_clock::now();
        schedule();
    }

    void add(const std::shared_ptr<Connection>& c) {
        members_.insert(c);
        c->send(std::make_shared<const std::string>(wire::to_json(wire::Outbound{session_.state_tick()}).dump()));
    }

    void remove(const std::shared_ptr<Connection>& c) {
        members_.erase(c);
        if (members_.empty()) {
            timer_.cancel();
            write_log();
            on_empty_(name_);
        }
    }

    void submit(wire::Inbound m) { session_.submit(std::move(m)); }

    void shutdown() {
        timer_.cancel();
        for (const auto& c : std::set<std::shared_ptr<Connection>>(members_)) c->close();
        write_log();
    }

private:
    void schedule() {
        timer_.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / opt_.tick_hz)));
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (!ec) self->step();
        });
    }

    void step() {
        const auto now = std::chrono::steady_clock::now();
        budget_ += std::chrono::duration<double>(now - last_).count() * opt_.time_scale;
        last_ = now;
        const double dt = session_.mix_params().dt;
        while (budget_ >= dt) {
            session_.tick();
            budget_ -= dt;
        }
        for (auto& m : session_.drain_outbox()) broadcast(wire::to_json(m).dump());
        broadcast(wire::to_json(wire::Outbound{session_.state_tick()}).dump());
        schedule();
    }

    void broadcast(std::string text) {
        auto shared = std::make_shared<const std::string>(std::move(text));
        for (const auto& c : members_) c->send(shared);
    }

    void write_log() {
        if (!opt_.log_dir || logged_) return;
        logged_ = true;
        std::filesystem::create_directories(*opt_.log_dir);
        std::string stem = name_.empty() ? "default" : name_;
        for (char& ch : stem)
            if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
        const auto stamp = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
        std::ofstream out(std::filesystem::path(*opt_.log_dir) / (stem + "-" + std::to_string(stamp) + ".events.jsonl"));
        session_.event_log().flush();
        session_.event_log().write(out);
    }

    std::string name_;
    Session session_;
    ServeOptions opt_;
    asio::steady_timer timer_;
    std::function<void(const std::string&)> on_empty_;
    std::set<std::shared_ptr<Connection>> members_;
    std::chrono::steady_clock::time_point last_;
    double budget_ = 0.0;
    bool logged_ = false;
};

void Connection::start(std::function<std::shared_ptr<Group>(const std::string&)> join) {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this(), join](beast::error_code ec, std::size_t) {
                         if (ec || !websocket::is_upgrade(self->request_)) return;
                         self->ws_.async_accept(self->request_, [self, join](beast::error_code ec2) {
                             if (ec2) return;
                             self->ws_.text(true);
                             self->group_ = join(std::string(self->request_.target()));
                             self->group_->add(self);
                             self->read();
                         });
                     });
}

void Connection::read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
            self->leave();
            return;
        }
        const std::string text = beast::buffers_to_string(self->buffer_.data());
        self->buffer_.consume(self->buffer_.size());
        self->on_message(text);
        self->read();
    });
}

void Connection::on_message(const std::string& text) {
    std::optional<long long> ref;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.is_object() && j.contains("id") && j.at("id").is_number_integer()) ref = j.at("id").get<long long>();
    } catch (const nlohmann::json::exception&) {
    }
    try {
        group_->submit(wire::parse_inbound(text));
    } catch (const wire::WireError& e) {
        send(std::make_shared<const std::string>(
            wire::to_json(wire::Outbound{wire::Fault{e.code(), e.what(), ref}}).dump()));
    }
}

void Connection::send(std::shared_ptr<const std::string> text) {
    if (closed_) return;
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
}

void Connection::write() {
    ws_.async_write(asio::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
            self->queue_.clear();
            self->leave();
            return;
        }
        self->queue_.pop_front();
        if (!self->queue_.empty()) self->write();
    });
}

void Connection::close() {
    if (closed_) return;
    closed_ = true;
    group_.reset();
    beast::error_code ec;
    ws_.next_layer().socket().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().socket().close(ec);
}

void Connection::leave() {
    if (!group_) return;
    auto g = std::move(group_);
    closed_ = true;
    g->remove(shared_from_this());
}

}  // namespace

struct Server::Impl {
    Impl(Scenario s, ServeOptions o) : scenario(std::move(s)), opt(std::move(o)) {}

    Scenario scenario;
    ServeOptions opt;
    asio::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::map<std::string, std::shared_ptr<Group>> groups;
    std::thread thread;

    void accept() {
        acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<Connection>(std::move(socket))->start([this](const std::string& path) { return join(path); });
            accept();
        });
    }

    void shutdown() {
        beast::error_code ec;
        acceptor.close(ec);
        for (auto& [_, g] : groups) g->shutdown();
        groups.clear();
        ioc.stop();
    }

    std::shared_ptr<Group> join(const std::string& path) {
        auto it = groups.find(path);
        if (it != groups.end()) return it->second;
        auto g = std::make_shared<Group>(ioc, path, scenario, opt, [this](const std::string& p) {
            asio::post(ioc, [this, p] { groups.erase(p); });
        });
        groups.emplace(path, g);
        g->start();
        return g;
    }
};

Server::Server(Scenario scenario, ServeOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(options))) {
    if (!(impl_->opt.tick_hz > 0.0) || !(impl_->opt.time_scale > 0.0))
        throw ServiceError("tick rate and time scale must be positive");
    Session probe(impl_->scenario, impl_->opt.seed);
    beast::error_code ec;
    const tcp::endpoint ep{asio::ip::make_address(impl_->opt.address, ec), impl_->opt.port};
    if (ec) throw ServiceError("bad address " + impl_->opt.address);
    auto& a = impl_->acceptor;
    a.open(ep.protocol(), ec);
    if (!ec) a.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) a.bind(ep, ec);
    if (!ec) a.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) throw ServiceError("cannot listen on " + impl_->opt.address + ":" + std::to_string(impl_->opt.port) + ": " + ec.message());
    impl_->accept();
}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
    asio::signal_set signals(impl_->ioc, SIGINT, SIGTERM);
    signals.async_wait([this](beast::error_code ec, int) {
        if (!ec) impl_->shutdown();
    });
    impl_->ioc.run();
}

void Server::start() {
    impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void Server::stop() {
    if (!impl_) return;
    asio::post(impl_->ioc, [this] { impl_->shutdown(); });
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace mixplan
