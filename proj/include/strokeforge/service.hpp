#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "strokeforge/config.hpp"
#include "strokeforge/pipeline.hpp"
#include "strokeforge/raster.hpp"

namespace strokeforge {

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8787;  // 0 picks a free port
    int workers = 2;
    std::size_t max_jobs = 64;
    std::size_t max_payload = 32u << 20;
    std::string cors_origin = "*";
};

inline constexpr int kDefaultPort = 8787;

/// STROKEFORGE_PORT if set and valid, else 8787.
int port_from_env();

enum class JobState { queued, running, done, failed };
std::string_view to_string(JobState s);

struct JobSnapshot {
    std::string id;
    JobState state = JobState::queued;
    std::optional<std::string> parent;
    PlanConfig config;
    std::shared_ptr<const PlanArtifacts> result;
    std::string error;
};

/// In-memory job table with a fixed worker pool. Finished jobs beyond
/// `max_jobs` are evicted least recently used first.
class JobService {
public:
    explicit JobService(const ServiceOptions& options);
    ~JobService();
    JobService(const JobService&) = delete;
    JobService& operator=(const JobService&) = delete;

    std::string submit(RasterImage image, PlanConfig config, std::optional<std::string> parent = std::nullopt);

    /// New job on the same image with `patch_json` merged into the job's
    /// config. Empty when the id is unknown; throws ConfigError on a bad patch.
    std::optional<std::string> replan(const std::string& id, std::string_view patch_json);

    std::optional<JobSnapshot> get(const std::string& id);
    bool remove(const std::string& id);

    /// Blocks until the job leaves the queue/running states or the timeout passes.
    std::optional<JobSnapshot> wait(const std::string& id, std::chrono::milliseconds timeout);

    std::size_t size();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// JSON view of a job as served by GET /api/jobs/{id}.
std::string job_json(const JobSnapshot& job);

/// HTTP front end for a JobService.
class HttpService {
public:
    explicit HttpService(const ServiceOptions& options);
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds the listening socket and returns the bound port.
    int bind();
    /// Serves until stop(); call after bind().
    void listen();
    void stop();
    bool running() const;

    JobService& jobs();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace strokeforge
