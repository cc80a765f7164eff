#include "support.hpp"
#include "wbseg/experiments.hpp"
#include "wbseg/session.hpp"

using namespace wbseg;

namespace {

PhantomCase session_case(std::size_t n = 40) {
  PhantomSpec spec;
  spec.dims = {n, n, n};
  const std::uint64_t seeds[] = {1};
  return generate_batch(spec, StrokeBudget{}, seeds).front();
}

PipelineConfig quick_config() {
  PipelineConfig c;
  c.classifier = ClassifierKind::Knn;
  c.hyper_mode = HyperMode::Fixed;
  return c;
}

}  // namespace

TEST_SUITE("session") {

TEST_CASE("creation gives distinct ids and rejects corrupt uploads") {
  SessionManager sm;
  const auto vol = testing::random_volume({4, 4, 4}, 3, 1);
  const auto a = sm.create(vol);
  const auto b = sm.create_from_bytes(serialize_volume(vol));
  CHECK(a != b);
  CHECK(sm.size() == 2);
  CHECK(*sm.volume(b) == vol);
  CHECK_ERROR_CODE(sm.create_from_bytes("not a volume"), ErrorCode::MalformedVolume);
  CHECK_ERROR_CODE(sm.create(MultiModalVolume({2, 2, 2}, {"a"}, std::vector<float>(8, 0.0f))), ErrorCode::EmptyMask);
  CHECK(sm.remove(a));
  CHECK_FALSE(sm.remove(a));
  CHECK_ERROR_CODE(sm.strokes(a), ErrorCode::UnknownSession);
}

TEST_CASE("strokes round-trip and clear") {
  SessionManager sm;
  const auto c = session_case(24);
  const auto id = sm.create(c.volume);
  const auto all = sm.add_strokes(id, c.strokes);
  CHECK(all == c.strokes);
  CHECK(sm.strokes(id) == c.strokes);
  CHECK_ERROR_CODE(sm.add_strokes(id, StrokeSet::from_entries({{{0, 0, 0}, TissueClass::Edema}})),
                   ErrorCode::StrokeOutsideMask);
  sm.clear_strokes(id);
  CHECK(sm.strokes(id).empty());
}

TEST_CASE("segmentation job lifecycle") {
  SessionManager sm;
  const auto c = session_case();
  const auto id = sm.create(c.volume);
  CHECK_ERROR_CODE(sm.report(id), ErrorCode::NoSegmentationYet);
  CHECK_ERROR_CODE(sm.overlay_png(id, Axis::Axial, 0), ErrorCode::NoSegmentationYet);

  StrokeSet partial;
  for (const auto& s : c.strokes.entries()) {
    if (s.label != TissueClass::Enhancing) partial.add(s);
  }
  sm.add_strokes(id, partial);
  CHECK_ERROR_CODE(sm.start_segmentation(id, quick_config()), ErrorCode::StrokesMissingClass);
  CHECK(sm.status(id).state == JobState::Idle);

  sm.add_strokes(id, c.strokes);
  PipelineConfig slow = quick_config();
  slow.classifier = ClassifierKind::Pksvm;
  slow.hyper_mode = HyperMode::Grid;
  sm.start_segmentation(id, slow);
  CHECK(sm.status(id).state == JobState::Running);
  CHECK_ERROR_CODE(sm.start_segmentation(id, slow), ErrorCode::SessionBusy);
  CHECK_ERROR_CODE(sm.add_strokes(id, c.strokes), ErrorCode::SessionBusy);
  CHECK_ERROR_CODE(sm.clear_strokes(id), ErrorCode::SessionBusy);
  CHECK(sm.evict_idle(SessionManager::Clock::now() + std::chrono::hours(5)) == 0);

  const auto done = sm.wait(id);
  CHECK(done.state == JobState::Done);
  CHECK(done.progress == 1.0);
  const auto rep = sm.report(id);
  CHECK(rep->labels.dims() == c.volume.dims());
  const auto m = sm.metrics(id, c.truth);
  CHECK(m[Region::Complete].dice > 0.7);
  CHECK(m.to_json() == evaluate_segmentation(rep->labels, c.truth, compute_brain_mask(c.volume)).to_json());
  CHECK_ERROR_CODE(sm.metrics(id, LabelVolume({2, 2, 2})), ErrorCode::DimsMismatch);
  CHECK(!sm.overlay_png(id, Axis::Axial, 20).empty());
}

TEST_CASE("idle sessions expire") {
  SessionManager sm(std::chrono::seconds(10));
  const auto id = sm.create(testing::random_volume({4, 4, 4}, 3, 1));
  CHECK(sm.evict_idle(SessionManager::Clock::now()) == 0);
  CHECK(sm.evict_idle(SessionManager::Clock::now() + std::chrono::seconds(11)) == 1);
  CHECK_ERROR_CODE(sm.status(id), ErrorCode::UnknownSession);
}

}
