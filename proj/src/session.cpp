#include "wbseg/session.hpp"

#include <array>
#include <random>
#include <sstream>

#include "wbseg/error.hpp"
#include "wbseg/png_image.hpp"

namespace wbseg {

std::string_view to_string(JobState state) {
  switch (state) {
    case JobState::Idle: return "idle";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "?";
}

nlohmann::json JobStatus::to_json() const {
  nlohmann::json j = {{"state", std::string(to_string(state))}, {"progress", progress}};
  if (!stage.empty()) j["stage"] = stage;
  if (state == JobState::Failed) {
    j["error"] = error_code;
    j["message"] = message;
  }
  return j;
}

SessionManager::SessionManager(std::chrono::seconds ttl) : ttl_(ttl) {}

SessionManager::~SessionManager() {
  std::map<std::string, std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mutex_);
    all.swap(sessions_);
  }
  for (auto& [id, s] : all) {
    if (s->job.joinable()) s->job.join();
  }
}

std::string SessionManager::fresh_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::ostringstream os;
  os << std::hex;
  for (int part = 0; part < 2; ++part) {
    os.width(16);
    os.fill('0');
    os << rng();
  }
  return os.str();
}

std::string SessionManager::create(MultiModalVolume vol, double mask_threshold) {
  auto s = std::make_shared<Session>();
  auto mask = std::make_shared<BrainMask>(compute_brain_mask(vol, mask_threshold));
  if (mask->count() == 0) throw Error(ErrorCode::EmptyMask, "volume has no voxel above the mask threshold");
  s->volume = std::make_shared<const MultiModalVolume>(std::move(vol));
  s->mask = std::move(mask);
  s->last_access = Clock::now();
  std::lock_guard lock(mutex_);
  std::string id;
  do {
    id = fresh_id();
  } while (sessions_.count(id));
  sessions_.emplace(id, std::move(s));
  return id;
}

std::string SessionManager::create_from_bytes(std::string_view mvol, double mask_threshold) {
  MultiModalVolume vol;
  try {
    vol = parse_volume(mvol);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedVolume, std::string(to_string(e.code())) + ": " + e.what());
  }
  return create(std::move(vol), mask_threshold);
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session '" + id + "'");
  it->second->last_access = Clock::now();
  return it->second;
}

StrokeSet SessionManager::add_strokes(const std::string& id, const StrokeSet& delta) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (s->status.state == JobState::Running) throw Error(ErrorCode::SessionBusy, "segmentation running");
  delta.check_bounds(s->volume->dims());
  for (const auto& e : delta.entries()) {
    if (!s->mask->contains(e.voxel)) {
      throw Error(ErrorCode::StrokeOutsideMask, "stroke voxel outside the brain mask");
    }
  }
  s->strokes.merge(delta);
  return s->strokes;
}

void SessionManager::clear_strokes(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (s->status.state == JobState::Running) throw Error(ErrorCode::SessionBusy, "segmentation running");
  s->strokes.clear();
}

StrokeSet SessionManager::strokes(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->strokes;
}

namespace {

// Share of the overall progress bar per stage, in pipeline order.
double overall_progress(std::string_view stage, double fraction) {
  static constexpr std::array<std::pair<std::string_view, double>, 5> kStages{{
      {"featurize", 0.05}, {"select", 0.25}, {"train", 0.10}, {"predict", 0.40}, {"crf", 0.20}}};
  double base = 0.0;
  for (const auto& [name, weight] : kStages) {
    if (name == stage) return std::min(1.0, base + weight * fraction);
    base += weight;
  }
  return base;
}

}  // namespace

void SessionManager::start_segmentation(const std::string& id, const PipelineConfig& config) {
  auto s = find(id);
  std::unique_lock lock(s->mutex);
  if (s->status.state == JobState::Running) throw Error(ErrorCode::SessionBusy, "segmentation already running");
  config.validate();
  check_stroke_coverage(s->strokes, config);
  if (s->job.joinable()) s->job.join();  // previous job has finished

  s->status = JobStatus{JobState::Running, 0.0, "featurize", "", ""};
  StrokeSet strokes = s->strokes;
  auto vol = s->volume;
  s->job = std::thread([s, vol, strokes = std::move(strokes), config] {
    try {
      auto rep = std::make_shared<SegmentationReport>(
          segment_volume(*vol, strokes, config, [&](std::string_view stage, double f) {
            std::lock_guard g(s->mutex);
            s->status.stage = std::string(stage);
            s->status.progress = overall_progress(stage, f);
          }));
      std::lock_guard g(s->mutex);
      s->report = std::move(rep);
      s->status = JobStatus{JobState::Done, 1.0, "", "", ""};
    } catch (const Error& e) {
      std::lock_guard g(s->mutex);
      s->status = JobStatus{JobState::Failed, s->status.progress, "", std::string(to_string(e.code())), e.what()};
    } catch (const std::exception& e) {
      std::lock_guard g(s->mutex);
      s->status = JobStatus{JobState::Failed, s->status.progress, "", "InternalError", e.what()};
    }
  });
}

JobStatus SessionManager::status(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return s->status;
}

JobStatus SessionManager::wait(const std::string& id) {
  auto s = find(id);
  std::thread job;
  {
    std::lock_guard lock(s->mutex);
    if (s->job.joinable()) job = std::move(s->job);
  }
  if (job.joinable()) job.join();
  std::lock_guard lock(s->mutex);
  return s->status;
}

std::shared_ptr<const SegmentationReport> SessionManager::report(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (!s->report) throw Error(ErrorCode::NoSegmentationYet, "no completed segmentation for this session");
  return s->report;
}

std::shared_ptr<const MultiModalVolume> SessionManager::volume(const std::string& id) {
  return find(id)->volume;
}

std::string SessionManager::slice_png(const std::string& id, Axis axis, std::size_t index,
                                      std::size_t modality) {
  return wbseg::slice_png(*volume(id), axis, index, modality);
}

std::string SessionManager::overlay_png(const std::string& id, Axis axis, std::size_t index) {
  auto rep = report(id);
  return wbseg::overlay_png(rep->labels, axis, index);
}

MetricsReport SessionManager::metrics(const std::string& id, const LabelVolume& truth) {
  auto s = find(id);
  std::shared_ptr<const SegmentationReport> rep;
  {
    std::lock_guard lock(s->mutex);
    rep = s->report;
  }
  if (!rep) throw Error(ErrorCode::NoSegmentationYet, "no completed segmentation for this session");
  if (truth.dims() != rep->labels.dims()) throw Error(ErrorCode::DimsMismatch, "truth dims differ from volume");
  return evaluate_segmentation(rep->labels, truth, *s->mask);
}

std::size_t SessionManager::evict_idle(Clock::time_point now) {
  std::vector<std::shared_ptr<Session>> dropped;
  {
    std::lock_guard lock(mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      auto& s = it->second;
      std::unique_lock sl(s->mutex);
      const bool idle = s->status.state != JobState::Running;
      if (idle && now - s->last_access > ttl_) {
        sl.unlock();
        dropped.push_back(s);
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& s : dropped) {
    if (s->job.joinable()) s->job.join();
  }
  return dropped.size();
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

bool SessionManager::remove(const std::string& id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    s = it->second;
    sessions_.erase(it);
  }
  std::thread job;
  {
    std::lock_guard lock(s->mutex);
    job = std::move(s->job);
  }
  if (job.joinable()) job.join();
  return true;
}

}  // namespace wbseg
