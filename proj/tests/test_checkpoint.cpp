#include <gtest/gtest.h>

#include "cscd/checkpoint.hpp"
#include "cscd/synthetic.hpp"

using namespace cscd;

namespace {

void advance(Detector& det, const SyntheticEnsemble& data, std::int64_t until) {
  while (det.time() < until) {
    const std::int64_t t = det.time();
    det.step([&](std::size_t s) { return data.observation(s, t + 1); });
  }
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto model = gaussian_iid_model(0.05);
  Detector det(model, DetectorConfig{0.05}, 400);
  const SyntheticEnsemble data(model, 400, 1, 0);
  advance(det, data, 12);
  std::vector<std::int64_t> labels(400);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = 1000 + static_cast<std::int64_t>(i);
  const auto blob = checkpoint(det, labels);
  const auto parsed = parse_checkpoint(blob);
  EXPECT_EQ(parsed.snapshot, det.snapshot());
  EXPECT_EQ(parsed.labels, labels);
  const Detector back = restore(blob, model, DetectorConfig{0.05});
  EXPECT_EQ(back.snapshot(), det.snapshot());
}

TEST(Checkpoint, ResumeMatchesUninterruptedRun) {
  struct Case {
    EnsembleModel model;
    DetectorConfig cfg;
    std::size_t k;
  };
  std::vector<Case> cases{
      {gaussian_iid_model(0.05), DetectorConfig{0.05}, 300},
      {counterexample_model(), DetectorConfig{0.34}, 4},
      {EnsembleModel(PartialDepModel{GeometricPrior(0.1), 0.5, ObservationModel(GaussianShift{})}), DetectorConfig{0.1}, 6},
      {EnsembleModel(PartialDepModel{GeometricPrior(0.05), 1.0, ObservationModel(GaussianShift{})}),
       DetectorConfig{0.05, Mode::dependent}, 50},
  };
  for (const auto& c : cases) {
    const SyntheticEnsemble data(c.model, c.k, 2, 0);
    Detector full(c.model, c.cfg, c.k);
    advance(full, data, 30);
    Detector first(c.model, c.cfg, c.k);
    advance(first, data, 11);
    Detector resumed = restore(checkpoint(first), c.model, c.cfg);
    advance(resumed, data, 30);
    EXPECT_EQ(resumed.trace(), full.trace());
    EXPECT_EQ(resumed.snapshot(), full.snapshot());
  }
}

TEST(Checkpoint, ExtremeLogOddsSurvive) {
  const auto model = gaussian_iid_model(0.3);
  Detector det(model, DetectorConfig{0.9}, 3);
  det.step([](std::size_t k) { return k == 0 ? 1e6 : (k == 1 ? -1e6 : 0.1); });
  const auto back = restore(checkpoint(det), model, DetectorConfig{0.9});
  EXPECT_EQ(back.posterior(), det.posterior());
}

TEST(Checkpoint, TruncatedOrCorruptedBlobRejected) {
  const auto model = gaussian_iid_model(0.05);
  Detector det(model, DetectorConfig{0.05}, 20);
  det.step([](std::size_t) { return 0.3; });
  const auto blob = checkpoint(det);
  try {
    (void)parse_checkpoint(blob.substr(0, blob.size() - 40));
    FAIL() << "truncated blob accepted";
  } catch (const checkpoint_error& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }
  auto flipped = blob;
  flipped[flipped.size() / 2] ^= 0x01;
  EXPECT_THROW(parse_checkpoint(flipped), checkpoint_error);
  EXPECT_THROW(parse_checkpoint("garbage"), checkpoint_error);
}

TEST(Checkpoint, VersionMismatchRejected) {
  const auto model = gaussian_iid_model(0.05);
  Detector det(model, DetectorConfig{0.05}, 2);
  auto blob = checkpoint(det);
  blob.replace(0, std::string("cscd-checkpoint 1").size(), "cscd-checkpoint 2");
  try {
    (void)parse_checkpoint(blob);
    FAIL();
  } catch (const checkpoint_error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Checkpoint, RestoreRefusesDifferentModelOrAlpha) {
  const auto model = gaussian_iid_model(0.05);
  Detector det(model, DetectorConfig{0.05}, 2);
  const auto blob = checkpoint(det);
  EXPECT_THROW(restore(blob, gaussian_iid_model(0.01), DetectorConfig{0.05}), checkpoint_error);
  EXPECT_THROW(restore(blob, model, DetectorConfig{0.1}), checkpoint_error);
}

TEST(Checkpoint, RefusesMidStepSnapshot) {
  Detector det(gaussian_iid_model(0.05), DetectorConfig{0.05}, 2);
  det.select();
  EXPECT_THROW(checkpoint(det), std::logic_error);
}
