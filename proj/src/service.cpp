#include "strokeforge/service.hpp"

#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <list>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "strokeforge/image_io.hpp"

namespace strokeforge {

using nlohmann::json;

int port_from_env() {
    if (const char* env = std::getenv("STROKEFORGE_PORT")) {
        char* end = nullptr;
        const long p = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && p > 0 && p < 65536) return static_cast<int>(p);
    }
    return kDefaultPort;
}

std::string_view to_string(JobState s) {
    switch (s) {
        case JobState::queued: return "queued";
        case JobState::running: return "running";
        case JobState::done: return "done";
        case JobState::failed: return "failed";
    }
    return "failed";
}

struct JobService::Impl {
    struct Job {
        JobSnapshot snap;
        std::shared_ptr<const RasterImage> image;
    };

    ServiceOptions options;
    Planner planner{16};
    std::mutex mutex;
    std::condition_variable work_cv;
    std::condition_variable done_cv;
    std::map<std::string, Job> jobs;
    std::list<std::string> recency;  // front = most recent
    std::deque<std::string> queue;
    std::vector<std::thread> workers;
    std::uint64_t next_id = 1;
    bool stopping = false;

    void touch(const std::string& id) {
        recency.remove(id);
        recency.push_front(id);
    }

    void evict() {
        auto it = recency.end();
        while (jobs.size() > options.max_jobs && it != recency.begin()) {
            --it;
            const auto job = jobs.find(*it);
            if (job != jobs.end() &&
                (job->second.snap.state == JobState::done || job->second.snap.state == JobState::failed)) {
                jobs.erase(job);
                it = recency.erase(it);
            }
        }
    }

    void work() {
        for (;;) {
            std::string id;
            std::shared_ptr<const RasterImage> image;
            PlanConfig config;
            {
                std::unique_lock lock(mutex);
                work_cv.wait(lock, [&] { return stopping || !queue.empty(); });
                if (stopping) return;
                id = queue.front();
                queue.pop_front();
                const auto it = jobs.find(id);
                if (it == jobs.end()) continue;
                it->second.snap.state = JobState::running;
                image = it->second.image;
                config = it->second.snap.config;
            }
            std::shared_ptr<const PlanArtifacts> result;
            std::string error;
            try {
                result = std::make_shared<const PlanArtifacts>(run_plan(*image, config, &planner));
            } catch (const std::exception& e) {
                error = e.what();
            }
            {
                std::lock_guard lock(mutex);
                const auto it = jobs.find(id);
                if (it != jobs.end()) {
                    it->second.snap.state = result ? JobState::done : JobState::failed;
                    it->second.snap.result = result;
                    it->second.snap.error = error;
                    evict();
                }
            }
            done_cv.notify_all();
        }
    }

    std::string enqueue(std::shared_ptr<const RasterImage> image, PlanConfig config,
                        std::optional<std::string> parent) {
        std::string id;
        {
            std::lock_guard lock(mutex);
            char buf[24];
            std::snprintf(buf, sizeof buf, "j%08llx", static_cast<unsigned long long>(next_id++));
            id = buf;
            Job job;
            job.snap.id = id;
            job.snap.parent = std::move(parent);
            job.snap.config = std::move(config);
            job.image = std::move(image);
            jobs.emplace(id, std::move(job));
            touch(id);
            queue.push_back(id);
            evict();
        }
        work_cv.notify_one();
        return id;
    }
};

JobService::JobService(const ServiceOptions& options) : impl_(std::make_unique<Impl>()) {
    impl_->options = options;
    const int n = std::max(1, options.workers);
    for (int i = 0; i < n; ++i) impl_->workers.emplace_back([this] { impl_->work(); });
}

JobService::~JobService() {
    {
        std::lock_guard lock(impl_->mutex);
        impl_->stopping = true;
    }
    impl_->work_cv.notify_all();
    for (auto& t : impl_->workers) t.join();
}

std::string JobService::submit(RasterImage image, PlanConfig config, std::optional<std::string> parent) {
    config.validate();
    return impl_->enqueue(std::make_shared<const RasterImage>(std::move(image)), std::move(config), std::move(parent));
}

std::optional<std::string> JobService::replan(const std::string& id, std::string_view patch_json) {
    std::shared_ptr<const RasterImage> image;
    PlanConfig base;
    {
        std::lock_guard lock(impl_->mutex);
        const auto it = impl_->jobs.find(id);
        if (it == impl_->jobs.end()) return std::nullopt;
        image = it->second.image;
        base = it->second.snap.config;
        impl_->touch(id);
    }
    PlanConfig patched = patch_config(base, patch_json);
    return impl_->enqueue(std::move(image), std::move(patched), id);
}

std::optional<JobSnapshot> JobService::get(const std::string& id) {
    std::lock_guard lock(impl_->mutex);
    const auto it = impl_->jobs.find(id);
    if (it == impl_->jobs.end()) return std::nullopt;
    impl_->touch(id);
    return it->second.snap;
}

bool JobService::remove(const std::string& id) {
    std::lock_guard lock(impl_->mutex);
    const auto it = impl_->jobs.find(id);
    if (it == impl_->jobs.end()) return false;
    impl_->jobs.erase(it);
    impl_->recency.remove(id);
    return true;
}

std::optional<JobSnapshot> JobService::wait(const std::string& id, std::chrono::milliseconds timeout) {
    std::unique_lock lock(impl_->mutex);
    impl_->done_cv.wait_for(lock, timeout, [&] {
        const auto it = impl_->jobs.find(id);
        return it == impl_->jobs.end() || it->second.snap.state == JobState::done ||
               it->second.snap.state == JobState::failed;
    });
    const auto it = impl_->jobs.find(id);
    if (it == impl_->jobs.end()) return std::nullopt;
    return it->second.snap;
}

std::size_t JobService::size() {
    std::lock_guard lock(impl_->mutex);
    return impl_->jobs.size();
}

std::string job_json(const JobSnapshot& job) {
    json j;
    j["id"] = job.id;
    j["state"] = std::string(to_string(job.state));
    j["parent"] = job.parent ? json(*job.parent) : json();
    j["config"] = json::parse(dump_config(job.config));
    j["error"] = job.error.empty() ? json() : json(job.error);
    if (job.result) {
        const PlanArtifacts& r = *job.result;
        j["result"] = {{"width", r.plan.width},
                       {"height", r.plan.height},
                       {"stroke_count", r.plan.strokes.size()},
                       {"plan_hash", fnv1a_hex(r.plan_json)},
                       {"base_plan_hash", r.base_plan_hash},
                       {"excluded", r.excluded}};
        const PlanStats& s = r.stats;
        j["timings"] = {{"step1_ms", s.step1_ms}, {"step2_ms", s.step2_ms}, {"step3_ms", s.step3_ms},
                        {"step4_ms", s.step4_ms}, {"render_ms", r.render_ms}};
        j["cache"] = {{"step1", s.step1_cached}, {"step2", s.step2_cached}, {"step3", s.step3_cached}};
        j["counts"] = {{"candidates", s.candidates}, {"after_density", s.after_density}, {"flagged", s.flagged},
                       {"discarded", s.discarded},   {"merged", s.merged}};
    } else {
        j["result"] = nullptr;
    }
    return j.dump();
}

namespace {

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const std::string* pointer = nullptr) {
    json body = {{"code", code}, {"message", message}};
    if (pointer) body["pointer"] = *pointer;
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

std::string_view code_for_status(int status) {
    switch (status) {
        case 400: return "bad_request";
        case 404: return "not_found";
        case 405: return "method_not_allowed";
        case 413: return "payload_too_large";
        case 422: return "invalid_config";
        default: return status >= 500 ? "internal_error" : "error";
    }
}

}  // namespace

struct HttpService::Impl {
    ServiceOptions options;
    JobService jobs;
    httplib::Server server;
    bool bound = false;

    explicit Impl(const ServiceOptions& o) : options(o), jobs(o) {}

    void routes() {
        server.set_payload_max_length(options.max_payload);
        server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin}});
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
            send_error(res, res.status, code_for_status(res.status), httplib::status_message(res.status));
            return httplib::Server::HandlerResponse::Handled;
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string what = "unexpected error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                what = e.what();
            } catch (...) {
            }
            send_error(res, 500, "internal_error", what);
        });
        server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.set_header("Access-Control-Max-Age", "600");
            res.status = 204;
        });

        server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok"})", "application/json");
        });

        server.Post("/api/jobs", [this](const httplib::Request& req, httplib::Response& res) {
            if (!req.has_file("image")) {
                send_error(res, 400, "bad_request", "multipart field 'image' is required");
                return;
            }
            PlanConfig config;
            if (req.has_file("config")) {
                const std::string text = req.get_file_value("config").content;
                try {
                    if (!text.empty()) config = parse_config(text);
                } catch (const ConfigError& e) {
                    send_error(res, 422, "invalid_config", e.what(), &e.pointer());
                    return;
                }
            }
            RasterImage image;
            try {
                const std::string& bytes = req.get_file_value("image").content;
                image = decode_image(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
            } catch (const std::exception& e) {
                send_error(res, 400, "invalid_image", e.what());
                return;
            }
            const std::string id = jobs.submit(std::move(image), std::move(config));
            res.status = 202;
            res.set_content(json{{"id", id}}.dump(), "application/json");
        });

        server.Get(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto job = jobs.get(req.matches[1]);
            if (!job) return send_error(res, 404, "not_found", "no job " + std::string(req.matches[1]));
            res.set_content(job_json(*job), "application/json");
        });

        server.Get(R"(/api/jobs/([^/]+)/result\.png)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto job = jobs.get(req.matches[1]);
            if (!job) return send_error(res, 404, "not_found", "no job " + std::string(req.matches[1]));
            if (!job->result) return not_ready(res, *job);
            const auto& png = job->result->png;
            res.set_content(std::string(png.begin(), png.end()), "image/png");
        });

        server.Get(R"(/api/jobs/([^/]+)/strokes)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto job = jobs.get(req.matches[1]);
            if (!job) return send_error(res, 404, "not_found", "no job " + std::string(req.matches[1]));
            if (!job->result) return not_ready(res, *job);
            res.set_content(job->result->plan_json, "application/json");
        });

        server.Post(R"(/api/jobs/([^/]+)/replan)", [this](const httplib::Request& req, httplib::Response& res) {
            std::optional<std::string> id;
            try {
                id = jobs.replan(req.matches[1], req.body.empty() ? std::string_view("{}") : req.body);
            } catch (const ConfigError& e) {
                return send_error(res, 422, "invalid_config", e.what(), &e.pointer());
            }
            if (!id) return send_error(res, 404, "not_found", "no job " + std::string(req.matches[1]));
            res.status = 202;
            res.set_content(json{{"id", *id}}.dump(), "application/json");
        });

        server.Delete(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            if (!jobs.remove(req.matches[1])) {
                return send_error(res, 404, "not_found", "no job " + std::string(req.matches[1]));
            }
            res.status = 204;
        });
    }

    static void not_ready(httplib::Response& res, const JobSnapshot& job) {
        if (job.state == JobState::failed) return send_error(res, 409, "job_failed", job.error);
        send_error(res, 409, "not_ready", "job is " + std::string(to_string(job.state)));
    }
};

HttpService::HttpService(const ServiceOptions& options) : impl_(std::make_unique<Impl>(options)) { impl_->routes(); }

HttpService::~HttpService() { stop(); }

int HttpService::bind() {
    int port = impl_->options.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(impl_->options.host);
    } else if (!impl_->server.bind_to_port(impl_->options.host, port)) {
        port = -1;
    }
    if (port < 0) throw std::runtime_error("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
    impl_->bound = true;
    return port;
}

void HttpService::listen() {
    if (!impl_->bound) bind();
    impl_->server.listen_after_bind();
}

void HttpService::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

bool HttpService::running() const { return impl_->server.is_running(); }

JobService& HttpService::jobs() { return impl_->jobs; }

}  // namespace strokeforge
