#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "wbseg/metrics.hpp"
#include "wbseg/pipeline.hpp"
#include "wbseg/strokes.hpp"
#include "wbseg/volume.hpp"

namespace wbseg {

enum class JobState { Idle, Running, Done, Failed };

std::string_view to_string(JobState state);

struct JobStatus {
  JobState state = JobState::Idle;
  double progress = 0.0;   // overall fraction in [0, 1]
  std::string stage;       // current pipeline stage while running
  std::string error_code;  // set when failed
  std::string message;

  nlohmann::json to_json() const;
};

/// In-memory interactive sessions: one volume each, a mutable stroke set and
/// at most one background segmentation job.
class SessionManager {
 public:
  using Clock = std::chrono::steady_clock;

  explicit SessionManager(std::chrono::seconds ttl = std::chrono::hours(1));
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  std::string create(MultiModalVolume vol, double mask_threshold = 0.0);
  // Parse failures surface as MalformedVolume.
  std::string create_from_bytes(std::string_view mvol, double mask_threshold = 0.0);

  StrokeSet add_strokes(const std::string& id, const StrokeSet& delta);
  void clear_strokes(const std::string& id);
  StrokeSet strokes(const std::string& id);

  void start_segmentation(const std::string& id, const PipelineConfig& config);
  JobStatus status(const std::string& id);
  // Blocks until the session's job (if any) has finished.
  JobStatus wait(const std::string& id);
  std::shared_ptr<const SegmentationReport> report(const std::string& id);

  std::shared_ptr<const MultiModalVolume> volume(const std::string& id);
  std::string slice_png(const std::string& id, Axis axis, std::size_t index, std::size_t modality);
  std::string overlay_png(const std::string& id, Axis axis, std::size_t index);
  MetricsReport metrics(const std::string& id, const LabelVolume& truth);

  // Drops idle sessions untouched for longer than the TTL.
  std::size_t evict_idle(Clock::time_point now = Clock::now());
  std::size_t size() const;
  bool remove(const std::string& id);

 private:
  struct Session {
    std::mutex mutex;
    std::shared_ptr<const MultiModalVolume> volume;
    std::shared_ptr<const BrainMask> mask;
    StrokeSet strokes;
    JobStatus status;
    std::shared_ptr<const SegmentationReport> report;
    Clock::time_point last_access;
    std::thread job;
  };

  std::shared_ptr<Session> find(const std::string& id);
  std::string fresh_id();

  std::chrono::seconds ttl_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace wbseg
