#ifndef BILEVEL_DYNAMICS_HPP
#define BILEVEL_DYNAMICS_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bilevel/world.hpp"

namespace bilevel {

struct EffectPrediction {
  std::vector<Vec3> per_object;  // meters; zero for unaffected objects
};

// Forward effect model: predicts the per-object position change of a
// pick-place action. Implementations are immutable after construction and
// safe to query from many threads.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual EffectPrediction predict(const ContinuousState& state,
                                   const ActionSpec& action) const = 0;
  virtual std::string kind() const = 0;
};

// Perfect predictor: replays the noise-free simulator and reports the delta.
class OraclePredictor : public Predictor {
 public:
  explicit OraclePredictor(PhysicsConfig physics) : phys_(physics) {
    phys_.noise_sigma = 0.0;
  }
  EffectPrediction predict(const ContinuousState& state,
                           const ActionSpec& action) const override;
  std::string kind() const override { return "oracle"; }

 private:
  PhysicsConfig phys_;
};

struct KnnConfig {
  int k = 5;
};

// Per-object k-nearest-neighbor regression over interaction data. Rows are
// bucketed by (pick offset, place offset, picked type, target type); query
// features are the object's role, its type bits, and its position relative
// to the picked and target objects.
class KnnPredictor : public Predictor {
 public:
  static constexpr int kFeatureDim = 11;  // role(3) + type(2) + rel pos(6)

  static KnnPredictor fit(const std::vector<Transition>& dataset,
                          KnnConfig cfg = {});

  EffectPrediction predict(const ContinuousState& state,
                           const ActionSpec& action) const override;
  std::string kind() const override { return "knn"; }

  std::size_t rows() const;
  int k() const { return cfg_.k; }

  void save(const std::string& path) const;
  static KnnPredictor load(const std::string& path);

 private:
  struct Key {
    int di, dj, picked_large, target_large;
    auto operator<=>(const Key&) const = default;
  };
  struct Bucket {
    std::vector<float> features;  // row-major, kFeatureDim per row
    std::vector<Vec3> effects;
  };

  KnnConfig cfg_;
  std::map<Key, Bucket> buckets_;

  Vec3 query(const Bucket& b, const float* feat) const;
};

std::unique_ptr<Predictor> make_zero_predictor();

}  // namespace bilevel

#endif
