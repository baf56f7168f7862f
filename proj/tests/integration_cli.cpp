#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "strokeforge/config.hpp"
#include "strokeforge/image_io.hpp"
#include "strokeforge/pipeline.hpp"
#include "test_support.hpp"

#ifndef STROKEFORGE_CLI_PATH
#error "STROKEFORGE_CLI_PATH must point at the CLI binary"
#endif

using namespace strokeforge;
namespace fs = std::filesystem;

namespace {

struct Workdir {
    fs::path dir;
    Workdir() {
        dir = fs::temp_directory_path() / ("sf_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Workdir() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
    const std::string cmd = std::string("\"") + STROKEFORGE_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

}  // namespace

TEST_CASE("exit codes") {
    Workdir w;
    write_png(w / "in.png", sft::to_8bit(sft::test_photo(40, 30, 1)));
    CHECK(run("") == 1);
    CHECK(run("plan") == 1);
    CHECK(run("frobnicate a b") == 1);
    CHECK(run("--help") == 0);
    CHECK(run("plan " + w / "missing.png " + w / "out.png") == 2);
    write_file_bytes(w / "bad.json", std::vector<std::uint8_t>{'{', '"', 'x', '"', ':', '1', '}'});
    CHECK(run("plan " + w / "in.png " + w / "out.png --config " + w / "bad.json") == 2);
    CHECK(run("render-plan " + w / "bad.json " + w / "out.png") == 2);
    CHECK(run("plan " + w / "in.png " + w / "out.png") == 0);
    CHECK(fs::exists(w / "out.png"));
}

TEST_CASE("plan is deterministic and matches the library") {
    Workdir w;
    const auto img = sft::to_8bit(sft::test_photo(48, 36, 2));
    write_png(w / "in.png", img);
    REQUIRE(run("plan " + w / "in.png " + w / "a.png --seed 7 --strokes-out " + w / "a.json") == 0);
    REQUIRE(run("plan " + w / "in.png " + w / "b.png --seed 7 --strokes-out " + w / "b.json") == 0);
    CHECK(slurp(w / "a.png") == slurp(w / "b.png"));
    CHECK(slurp(w / "a.json") == slurp(w / "b.json"));

    PlanConfig cfg;
    cfg.seed = 7;
    const auto art = run_plan(read_image(w / "in.png"), cfg);
    CHECK(slurp(w / "a.json") == art.plan_json);
    CHECK(slurp(w / "a.png") == std::string(art.png.begin(), art.png.end()));
}

TEST_CASE("render-plan reproduces the plan output") {
    Workdir w;
    write_png(w / "in.png", sft::to_8bit(sft::test_photo(40, 40, 3)));
    save_config(w / "cfg.json", parse_config(R"({"render":{"brush":"rectangle","background":[0,0,0,1]}})"));
    REQUIRE(run("plan " + w / "in.png " + w / "p.png --config " + w / "cfg.json --strokes-out " + w / "s.json") == 0);
    REQUIRE(run("render-plan " + w / "s.json " + w / "r.png --config " + w / "cfg.json") == 0);
    CHECK(slurp(w / "p.png") == slurp(w / "r.png"));
}

TEST_CASE("config prints the canonical form") {
    Workdir w;
    const std::string cmd = std::string("\"") + STROKEFORGE_CLI_PATH + "\" config --seed 11 > " + (w / "c.json");
    REQUIRE(std::system(cmd.c_str()) == 0);
    PlanConfig expected;
    expected.seed = 11;
    CHECK(slurp(w / "c.json") == dump_config(expected));
}

TEST_CASE("classical and stylize commands write images") {
    Workdir w;
    write_png(w / "c.png", sft::to_8bit(sft::test_photo(24, 24, 4)));
    write_png(w / "s.png", sft::to_8bit(sft::test_photo(24, 24, 5)));
    save_config(w / "cfg.json", parse_config(R"({"stylize":{"iterations":3}})"));
    CHECK(run("render-classical " + w / "c.png " + w / "k.png") == 0);
    CHECK(read_image(w / "k.png").width() == 24);
    CHECK(run("stylize " + w / "c.png " + w / "s.png " + w / "st.png --config " + w / "cfg.json") == 0);
    CHECK(read_image(w / "st.png").height() == 24);
}
