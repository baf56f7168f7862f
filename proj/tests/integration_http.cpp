#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "strokeforge/config.hpp"
#include "strokeforge/image_io.hpp"
#include "strokeforge/pipeline.hpp"
#include "strokeforge/service.hpp"
#include "test_support.hpp"

using namespace strokeforge;
using nlohmann::json;

namespace {

class Server {
public:
    explicit Server(ServiceOptions opt = {}) : service_((opt.port = 0, opt)) {
        port_ = service_.bind();
        thread_ = std::thread([this] { service_.listen(); });
        for (int i = 0; i < 200 && !service_.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ~Server() {
        service_.stop();
        thread_.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60, 0);
        return c;
    }

private:
    HttpService service_;
    int port_ = 0;
    std::thread thread_;
};

std::string png_bytes(const RasterImage& img) {
    const auto b = encode_png(img);
    return {b.begin(), b.end()};
}

std::string submit(httplib::Client& c, const std::string& png, const std::string& config = "") {
    httplib::MultipartFormDataItems items{{"image", png, "in.png", "image/png"}};
    if (!config.empty()) items.push_back({"config", config, "config.json", "application/json"});
    const auto res = c.Post("/api/jobs", items);
    REQUIRE(res);
    REQUIRE(res->status == 202);
    return json::parse(res->body)["id"].get<std::string>();
}

json wait_done(httplib::Client& c, const std::string& id) {
    for (int i = 0; i < 6000; ++i) {
        const auto res = c.Get("/api/jobs/" + id);
        REQUIRE(res);
        REQUIRE(res->status == 200);
        json j = json::parse(res->body);
        if (j["state"] == "done" || j["state"] == "failed") return j;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    FAIL("job did not finish");
    return {};
}

std::string get_body(httplib::Client& c, const std::string& path, int status = 200) {
    const auto res = c.Get(path);
    REQUIRE(res);
    CHECK(res->status == status);
    return res->body;
}

}  // namespace

TEST_CASE("health and CORS") {
    Server s;
    auto c = s.client();
    const auto res = c.Get("/api/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["status"] == "ok");
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    const auto pre = c.Options("/api/jobs");
    REQUIRE(pre);
    CHECK(pre->status == 204);
    CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("job lifecycle matches the library pipeline") {
    Server s;
    auto c = s.client();
    const auto img = sft::to_8bit(sft::test_photo(40, 32, 6));
    const auto png = png_bytes(img);
    const std::string cfg_text = R"({"seed":7})";
    const std::string id = submit(c, png, cfg_text);
    const json job = wait_done(c, id);
    REQUIRE(job["state"] == "done");
    CHECK(job["result"]["width"] == 40);
    CHECK(job["parent"].is_null());

    const auto art = run_plan(decode_image(std::vector<std::uint8_t>(png.begin(), png.end())), parse_config(cfg_text));
    CHECK(get_body(c, "/api/jobs/" + id + "/result.png") == std::string(art.png.begin(), art.png.end()));
    CHECK(get_body(c, "/api/jobs/" + id + "/strokes") == art.plan_json);
    CHECK(job["result"]["stroke_count"] == art.plan.strokes.size());
    CHECK(job["result"]["plan_hash"] == fnv1a_hex(art.plan_json));

    const auto del = c.Delete("/api/jobs/" + id);
    REQUIRE(del);
    CHECK(del->status == 204);
    get_body(c, "/api/jobs/" + id, 404);
}

TEST_CASE("replan") {
    Server s;
    auto c = s.client();
    const auto img = sft::to_8bit(sft::two_tone(36, 28));
    const auto png = png_bytes(img);
    const std::string id = submit(c, png, R"({"refiner":"local_search"})");
    REQUIRE(wait_done(c, id)["state"] == "done");
    const std::string base = get_body(c, "/api/jobs/" + id + "/result.png");

    auto r = c.Post("/api/jobs/" + id + "/replan", "{}", "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 202);
    const std::string same = json::parse(r->body)["id"];
    const json same_job = wait_done(c, same);
    CHECK(same_job["parent"] == id);
    CHECK(same_job["cache"]["step1"] == true);
    CHECK(get_body(c, "/api/jobs/" + same + "/result.png") == base);

    r = c.Post("/api/jobs/" + id + "/replan", R"({"hybrid":{"blend_gamma":0}})", "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 202);
    const std::string heur = json::parse(r->body)["id"];
    REQUIRE(wait_done(c, heur)["state"] == "done");
    PlanConfig identity;
    identity.refiner = "identity";
    CHECK(get_body(c, "/api/jobs/" + heur + "/strokes") ==
          run_plan(decode_image(std::vector<std::uint8_t>(png.begin(), png.end())), identity).plan_json);
}

TEST_CASE("error responses") {
    ServiceOptions opt;
    opt.max_payload = 4096;
    Server s(opt);
    auto c = s.client();

    auto res = c.Get("/api/jobs/nope");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(json::parse(res->body)["code"] == "not_found");
    res = c.Post("/api/jobs/nope/replan", "{}", "application/json");
    REQUIRE(res);
    CHECK(res->status == 404);
    res = c.Delete("/api/jobs/nope");
    REQUIRE(res);
    CHECK(res->status == 404);

    const auto small = png_bytes(sft::to_8bit(sft::test_photo(8, 8, 1)));
    httplib::MultipartFormDataItems bad_cfg{{"image", small, "in.png", "image/png"},
                                            {"config", R"({"hybrid":{"blend_gamma":1.5}})", "c.json", "application/json"}};
    res = c.Post("/api/jobs", bad_cfg);
    REQUIRE(res);
    CHECK(res->status == 422);
    CHECK(json::parse(res->body)["pointer"] == "/hybrid/blend_gamma");

    httplib::MultipartFormDataItems bad_img{{"image", "garbage", "in.png", "image/png"}};
    res = c.Post("/api/jobs", bad_img);
    REQUIRE(res);
    CHECK(res->status == 400);
    httplib::MultipartFormDataItems none{{"config", "{}", "c.json", "application/json"}};
    res = c.Post("/api/jobs", none);
    REQUIRE(res);
    CHECK(res->status == 400);

    const std::string id = submit(c, small);
    wait_done(c, id);
    res = c.Post("/api/jobs/" + id + "/replan", R"({"render":{"brush":"spray"}})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    CHECK(json::parse(res->body)["pointer"] == "/render/brush");

    const auto big = png_bytes(sft::random_image(64, 64, 3, 1));
    httplib::MultipartFormDataItems large{{"image", big, "in.png", "image/png"}};
    res = c.Post("/api/jobs", large);
    REQUIRE(res);
    CHECK(res->status == 413);
}

TEST_CASE("port from environment") {
    ::unsetenv("STROKEFORGE_PORT");
    CHECK(port_from_env() == kDefaultPort);
    ::setenv("STROKEFORGE_PORT", "9123", 1);
    CHECK(port_from_env() == 9123);
    ::setenv("STROKEFORGE_PORT", "banana", 1);
    CHECK(port_from_env() == kDefaultPort);
    ::unsetenv("STROKEFORGE_PORT");
}
