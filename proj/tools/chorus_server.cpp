// chorus-server: the gateway over HTTP, with a background clock.
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "chorus/http_api.hpp"

using namespace chorus;

namespace {
httplib::Server* g_server = nullptr;
void on_signal(int) {
    if (g_server != nullptr) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chorus gateway server"};
    std::string config_path, log_path = "chorus-events.jsonl", host = "127.0.0.1";
    int port = 8080, threads = 32;
    app.add_option("--config", config_path, "JSON config; CHORUS_<SECTION>_<KEY> variables override it")
        ->check(CLI::ExistingFile);
    app.add_option("--log", log_path, "Event log, replayed at start and appended to");
    app.add_option("--host", host);
    app.add_option("--port", port)->check(CLI::Range(0, 65535));
    app.add_option("--threads", threads, "Worker threads; each open event stream holds one")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    try {
        Service::Options opts;
        opts.config = config_path.empty() ? apply_env_overrides(Config{}) : load_config(config_path);
        opts.log_path = log_path;
        Service service(opts);

        httplib::Server server;
        server.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
        service.mount(server);

        std::atomic<bool> running{true};
        std::thread clock([&] {
            while (running) {
                try {
                    service.tick();
                } catch (const std::exception& e) {
                    std::cerr << "tick: " << e.what() << '\n';
                }
                std::this_thread::sleep_for(std::chrono::seconds(1));
            }
        });

        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cerr << "chorus-server listening on " << host << ':' << port << ", log " << log_path << '\n';
        const bool ok = server.listen(host, port);
        running = false;
        service.shut_down();
        clock.join();
        if (!ok) {
            std::cerr << "chorus-server: cannot listen on " << host << ':' << port << '\n';
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "chorus-server: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
