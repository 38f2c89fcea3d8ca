#pragma once

#include <cstdint>
#include <vector>

#include "cscd/model.hpp"
#include "cscd/rng.hpp"

namespace cscd {

/// One simulated replication: change points drawn from the (seed, rep,
/// kChangePointStream) substream, and the observation of stream k at time t
/// drawn from position t of the (seed, rep, k) substream. Any observation can
/// be regenerated independently, so the data do not depend on thread layout.
class SyntheticEnsemble {
 public:
  SyntheticEnsemble(const EnsembleModel& model, std::size_t n_streams, std::uint64_t seed, std::uint64_t rep)
      : model_(&model), seed_(seed), rep_(rep) {
    CounterRng rng(substream_key(seed, rep, kChangePointStream));
    taus_ = sample_change_points(model, n_streams, rng);
  }

  const std::vector<ChangePoint>& taus() const { return taus_; }
  std::size_t size() const { return taus_.size(); }

  double observation(std::size_t k, std::int64_t t) const {
    CounterRng rng = at_time(substream_key(seed_, rep_, k), t);
    return sample_observation(*model_, k, t, taus_[k], rng);
  }

 private:
  const EnsembleModel* model_;
  std::uint64_t seed_;
  std::uint64_t rep_;
  std::vector<ChangePoint> taus_;
};

}  // namespace cscd
