#include "bilevel/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bilevel {

EffectPrediction OraclePredictor::predict(const ContinuousState& state,
                                          const ActionSpec& action) const {
  ContinuousState post = step_noise_free(state, action, phys_);
  EffectPrediction out;
  out.per_object.resize(state.size());
  for (int i = 0; i < state.size(); ++i)
    out.per_object[i] = post.pos(i) - state.pos(i);
  return out;
}

namespace {

void fill_features(float* f, const ContinuousState& state, int obj,
                   const ActionSpec& a) {
  const int role = obj == a.pick_index ? 0
                   : (obj == a.place_index ? 1 : 2);
  f[0] = role == 0 ? 1.0f : 0.0f;
  f[1] = role == 1 ? 1.0f : 0.0f;
  f[2] = role == 2 ? 1.0f : 0.0f;
  const ObjectFeature& o = state.objects[obj];
  f[3] = o.is_large ? 1.0f : 0.0f;
  f[4] = o.is_large ? 0.0f : 1.0f;
  Vec3 rp = o.position - state.pos(a.pick_index);
  Vec3 rt = o.position - state.pos(a.place_index);
  f[5] = static_cast<float>(rp.x);
  f[6] = static_cast<float>(rp.y);
  f[7] = static_cast<float>(rp.z);
  f[8] = static_cast<float>(rt.x);
  f[9] = static_cast<float>(rt.y);
  f[10] = static_cast<float>(rt.z);
}

}  // namespace

KnnPredictor KnnPredictor::fit(const std::vector<Transition>& dataset,
                               KnnConfig cfg) {
  if (dataset.empty()) throw std::invalid_argument("knn fit: empty dataset");
  if (cfg.k < 1) throw std::invalid_argument("knn fit: k must be >= 1");
  KnnPredictor p;
  p.cfg_ = cfg;
  for (const auto& tr : dataset) {
    const ActionSpec& a = tr.action;
    Key key{a.pick_offset, a.place_offset,
            tr.pre.objects[a.pick_index].is_large ? 1 : 0,
            tr.pre.objects[a.place_index].is_large ? 1 : 0};
    Bucket& b = p.buckets_[key];
    for (int i = 0; i < tr.pre.size(); ++i) {
      std::size_t base = b.features.size();
      b.features.resize(base + kFeatureDim);
      fill_features(b.features.data() + base, tr.pre, i, a);
      b.effects.push_back(tr.effect[i]);
    }
  }
  return p;
}

Vec3 KnnPredictor::query(const Bucket& b, const float* feat) const {
  const std::size_t rows = b.effects.size();
  // (distance^2, row index); ties broken by insertion order
  std::vector<std::pair<float, std::size_t>> best;
  best.reserve(static_cast<std::size_t>(cfg_.k) + 1);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = b.features.data() + r * kFeatureDim;
    float d2 = 0.0f;
    for (int c = 0; c < kFeatureDim; ++c) {
      float d = row[c] - feat[c];
      d2 += d * d;
    }
    if (best.size() < static_cast<std::size_t>(cfg_.k)) {
      best.emplace_back(d2, r);
      std::push_heap(best.begin(), best.end());
    } else if (d2 < best.front().first) {
      std::pop_heap(best.begin(), best.end());
      best.back() = {d2, r};
      std::push_heap(best.begin(), best.end());
    }
  }
  std::sort(best.begin(), best.end());

  // exact matches dominate: average them and ignore the rest
  constexpr float kExact = 1e-12f;
  if (!best.empty() && best.front().first < kExact) {
    Vec3 sum{0, 0, 0};
    int count = 0;
    for (const auto& [d2, r] : best) {
      if (d2 >= kExact) break;
      sum += b.effects[r];
      ++count;
    }
    return {sum.x / count, sum.y / count, sum.z / count};
  }

  double wsum = 0.0;
  Vec3 acc{0, 0, 0};
  for (const auto& [d2, r] : best) {
    double w = 1.0 / std::sqrt(static_cast<double>(d2));
    acc += {w * b.effects[r].x, w * b.effects[r].y, w * b.effects[r].z};
    wsum += w;
  }
  if (wsum == 0.0) return {0, 0, 0};
  return {acc.x / wsum, acc.y / wsum, acc.z / wsum};
}

EffectPrediction KnnPredictor::predict(const ContinuousState& state,
                                       const ActionSpec& action) const {
  EffectPrediction out;
  out.per_object.assign(state.size(), Vec3{0, 0, 0});
  Key key{action.pick_offset, action.place_offset,
          state.objects[action.pick_index].is_large ? 1 : 0,
          state.objects[action.place_index].is_large ? 1 : 0};
  auto it = buckets_.find(key);
  if (it == buckets_.end()) return out;  // unseen regime: predict no motion
  float feat[kFeatureDim];
  for (int i = 0; i < state.size(); ++i) {
    fill_features(feat, state, i, action);
    out.per_object[i] = query(it->second, feat);
  }
  return out;
}

std::size_t KnnPredictor::rows() const {
  std::size_t total = 0;
  for (const auto& [key, b] : buckets_) total += b.effects.size();
  return total;
}

void KnnPredictor::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << "knn-model 1 k=" << cfg_.k << "\n";
  char buf[64];
  for (const auto& [key, b] : buckets_) {
    for (std::size_t r = 0; r < b.effects.size(); ++r) {
      f << key.di << ' ' << key.dj << ' ' << key.picked_large << ' '
        << key.target_large;
      const float* row = b.features.data() + r * kFeatureDim;
      for (int c = 0; c < kFeatureDim; ++c) {
        std::snprintf(buf, sizeof(buf), " %a", static_cast<double>(row[c]));
        f << buf;
      }
      const Vec3& e = b.effects[r];
      std::snprintf(buf, sizeof(buf), " %a", e.x);
      f << buf;
      std::snprintf(buf, sizeof(buf), " %a", e.y);
      f << buf;
      std::snprintf(buf, sizeof(buf), " %a", e.z);
      f << buf;
      f << "\n";
    }
  }
}

KnnPredictor KnnPredictor::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string magic;
  int version = 0;
  std::string kfield;
  f >> magic >> version >> kfield;
  if (magic != "knn-model" || version != 1 || kfield.rfind("k=", 0) != 0)
    throw std::runtime_error("bad knn model header: " + path);
  KnnPredictor p;
  p.cfg_.k = std::stoi(kfield.substr(2));
  Key key{};
  std::string tok;
  auto next_double = [&]() {
    if (!(f >> tok)) throw std::runtime_error("truncated knn model: " + path);
    return std::strtod(tok.c_str(), nullptr);  // %a-formatted tokens
  };
  while (f >> key.di >> key.dj >> key.picked_large >> key.target_large) {
    Bucket& b = p.buckets_[key];
    std::size_t base = b.features.size();
    b.features.resize(base + kFeatureDim);
    for (int c = 0; c < kFeatureDim; ++c)
      b.features[base + c] = static_cast<float>(next_double());
    Vec3 e;
    e.x = next_double();
    e.y = next_double();
    e.z = next_double();
    b.effects.push_back(e);
  }
  return p;
}

namespace {

class ZeroPredictor : public Predictor {
 public:
  EffectPrediction predict(const ContinuousState& state,
                           const ActionSpec&) const override {
    EffectPrediction out;
    out.per_object.assign(state.size(), Vec3{0, 0, 0});
    return out;
  }
  std::string kind() const override { return "zero"; }
};

}  // namespace

std::unique_ptr<Predictor> make_zero_predictor() {
  return std::make_unique<ZeroPredictor>();
}

}  // namespace bilevel
