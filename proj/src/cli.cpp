#include "strokeforge/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "strokeforge/config.hpp"
#include "strokeforge/image_io.hpp"
#include "strokeforge/pipeline.hpp"
#include "strokeforge/plan_codec.hpp"
#include "strokeforge/service.hpp"

namespace strokeforge {

namespace {

constexpr int kUsageError = 1;
constexpr int kProcessingError = 2;

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted.store(true); }

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;

    PlanConfig load() const {
        PlanConfig cfg = config_path.empty() ? PlanConfig{} : load_config(config_path);
        if (seed) cfg.seed = *seed;
        return cfg;
    }
};

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
    cmd->add_option("--config", c.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    if (with_seed) cmd->add_option("--seed", c.seed, "RNG seed (overrides the config)");
}

std::string read_text(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

int serve(const std::string& host, std::optional<int> port, int workers) {
    ServiceOptions opts;
    opts.host = host;
    opts.port = port.value_or(port_from_env());
    opts.workers = workers;
    HttpService service(opts);
    const int bound = service.bind();
    std::cerr << "strokeforge: listening on http://" << opts.host << ":" << bound << "\n";
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::thread watcher([&service] {
        while (!g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        service.stop();
    });
    service.listen();
    g_interrupted.store(true);
    watcher.join();
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"strokeforge: stroke-based image stylization", "strokeforge"};
    app.require_subcommand(1);

    Common common;
    std::string in_path;
    std::string style_path;
    std::string out_path;
    std::string strokes_out;
    std::string host = "127.0.0.1";
    std::optional<int> port;
    int workers = 2;

    auto* classical = app.add_subcommand("render-classical", "Layered painterly rendering");
    classical->add_option("input", in_path, "Input image (PNG or PPM)")->required();
    classical->add_option("output", out_path, "Output PNG")->required();
    add_common(classical, common);

    auto* styl = app.add_subcommand("stylize", "Gradient-descent style transfer");
    styl->add_option("content", in_path, "Content image")->required();
    styl->add_option("style", style_path, "Style image")->required();
    styl->add_option("output", out_path, "Output PNG")->required();
    add_common(styl, common);

    auto* plan_cmd = app.add_subcommand("plan", "Hybrid stroke planning and rendering");
    plan_cmd->add_option("input", in_path, "Input image")->required();
    plan_cmd->add_option("output", out_path, "Output PNG")->required();
    plan_cmd->add_option("--strokes-out", strokes_out, "Write the stroke plan JSON here");
    add_common(plan_cmd, common);

    auto* render_cmd = app.add_subcommand("render-plan", "Render a stroke plan JSON");
    render_cmd->add_option("plan", in_path, "Stroke plan JSON")->required();
    render_cmd->add_option("output", out_path, "Output PNG")->required();
    add_common(render_cmd, common, false);

    auto* config_cmd = app.add_subcommand("config", "Print the effective configuration in canonical form");
    add_common(config_cmd, common);

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP job service");
    serve_cmd->add_option("--port", port, "Port (default: STROKEFORGE_PORT or 8787)")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--workers", workers, "Concurrent jobs")->check(CLI::Range(1, 64));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, std::cerr, std::cerr);
        if (code == 0) return 0;
        std::cerr << "\n" << app.help();
        return kUsageError;
    }

    try {
        if (classical->parsed()) {
            const PlanConfig cfg = common.load();
            write_png(out_path, run_classical(read_image(in_path), cfg));
        } else if (styl->parsed()) {
            const PlanConfig cfg = common.load();
            write_png(out_path, run_stylize(read_image(in_path), read_image(style_path), cfg));
        } else if (plan_cmd->parsed()) {
            const PlanConfig cfg = common.load();
            const PlanArtifacts art = run_plan(read_image(in_path), cfg);
            write_file_bytes(out_path, art.png);
            if (!strokes_out.empty()) {
                write_file_bytes(strokes_out, std::span(reinterpret_cast<const std::uint8_t*>(art.plan_json.data()),
                                                        art.plan_json.size()));
            }
            std::cerr << "strokeforge: " << art.plan.strokes.size() << " strokes, plan " << art.base_plan_hash
                      << "\n";
        } else if (render_cmd->parsed()) {
            const PlanConfig cfg = common.load();
            const StrokePlan plan = parse_plan(read_text(in_path));
            write_png(out_path, render_plan(plan, cfg.render));
        } else if (config_cmd->parsed()) {
            std::cout << dump_config(common.load());
        } else if (serve_cmd->parsed()) {
            return serve(host, port, workers);
        }
    } catch (const std::exception& e) {
        std::cerr << "strokeforge: error: " << e.what() << "\n";
        return kProcessingError;
    }
    return 0;
}

}  // namespace strokeforge
