#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include "msnv/server.hpp"

using namespace msnv;

namespace {
volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serve study sessions over NDJSON or WebSocket."};
    ServerConfig config;
    std::string docs_dir, strategy = "desaturate";
    double fraction = kDefaultTriggerFraction;
    app.add_option("--port", config.port, "TCP port (0 picks a free one)");
    app.add_option("--bind", config.bind_address);
    app.add_option("--docs", docs_dir, "Directory of msnv/1 documents")->required()->check(CLI::ExistingDirectory);
    app.add_option("--seed", config.seed, "Task-order seed");
    app.add_option("--strategy", strategy, "keep | remove | desaturate");
    app.add_option("--fraction", fraction, "Trigger fraction of mean fixations")->check(CLI::Range(0.0, 1.0));
    app.add_option("--log-dir", config.log_dir, "Where session logs and traces go");
    CLI11_PARSE(app, argc, argv);

    try {
        config.pipeline.engine.strategy = strategy_from_string(strategy);
        config.pipeline.engine.fraction = fraction;
        auto store = std::make_shared<DocumentStore>();
        for (auto& d : load_documents(docs_dir)) {
            config.pipeline.display = d.layout.display;
            (*store)[d.id] = std::move(d);
        }
        if (store->empty()) throw std::runtime_error("no documents in " + docs_dir);
        if (!config.log_dir.empty()) std::filesystem::create_directories(config.log_dir);

        SessionServer server(config, store);
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        server.start();
        std::cout << "listening on " << config.bind_address << ':' << server.port() << " with " << store->size()
                  << " documents" << std::endl;
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
        std::cout << server.completed_sessions() << " sessions completed" << std::endl;
    } catch (const std::exception& e) {
        std::cerr << "msnv-server: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
