#ifndef BILEVEL_WORLD_HPP
#define BILEVEL_WORLD_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bilevel/rng.hpp"

namespace bilevel {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  bool operator==(const Vec3& o) const = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double lateral_distance(const Vec3& o) const {
    double dx = x - o.x, dy = y - o.y;
    return std::sqrt(dx * dx + dy * dy);
  }
};

// Tabletop physics parameters. Blocks are axis-aligned cubes; positions are
// cube centers; the table is the square [0, table_size]^2 at z = 0.
struct PhysicsConfig {
  double large_edge = 0.06;
  double small_edge = 0.03;
  double table_size = 1.0;
  double offset_unit = 0.02;   // lateral meters per offset step
  double support_frac = 0.5;   // min footprint overlap for a stable placement
  double noise_sigma = 0.0;    // release noise per lateral axis, meters
  double stack_z_tol = 1e-6;   // contact detection between exact placements
  double clearance = 1e-3;     // min gap enforced when dropping to the table

  bool operator==(const PhysicsConfig&) const = default;
};

struct ObjectFeature {
  Vec3 position;
  bool is_large = false;

  std::array<int, 2> type_onehot() const {
    return {is_large ? 1 : 0, is_large ? 0 : 1};
  }
  double edge(const PhysicsConfig& cfg) const {
    return is_large ? cfg.large_edge : cfg.small_edge;
  }
  double half(const PhysicsConfig& cfg) const { return 0.5 * edge(cfg); }
  double top(const PhysicsConfig& cfg) const { return position.z + half(cfg); }
  double bottom(const PhysicsConfig& cfg) const { return position.z - half(cfg); }

  bool operator==(const ObjectFeature&) const = default;
};

struct ContinuousState {
  std::vector<ObjectFeature> objects;

  int size() const { return static_cast<int>(objects.size()); }
  const Vec3& pos(int i) const { return objects[i].position; }
  bool operator==(const ContinuousState&) const = default;
};

// The pick-place tuple: grasp object pick_index at lateral offset
// pick_offset, release over place_index at lateral offset place_offset.
// Offsets are in {-1, 0, +1}; pick_index == place_index is a legal
// self-placement.
struct ActionSpec {
  int pick_index = 0;
  int pick_offset = 0;
  int place_index = 0;
  int place_offset = 0;

  bool operator==(const ActionSpec&) const = default;
  bool valid_for(int n) const {
    return pick_index >= 0 && pick_index < n && place_index >= 0 &&
           place_index < n && pick_offset >= -1 && pick_offset <= 1 &&
           place_offset >= -1 && place_offset <= 1;
  }
};

struct Transition {
  ContinuousState pre;
  ActionSpec action;
  ContinuousState post;
  std::vector<Vec3> effect;  // post.position[i] - pre.position[i]
};

struct Problem {
  ContinuousState init;
  ContinuousState goal;
  double epsilon = 0.05;
  // provenance
  int n = 0;
  int k = 0;
  std::uint64_t seed = 0;
};

enum class SuccessMetric { PerObject, WholeState };

// --- stacking / support queries ------------------------------------------

// intersection area of the two blocks' footprints
double footprint_overlap_area(const ObjectFeature& a, const ObjectFeature& b,
                              const PhysicsConfig& cfg);
// true if block `above` rests directly on `below` (contact + xy overlap)
bool rests_on(const ObjectFeature& above, const ObjectFeature& below,
              const PhysicsConfig& cfg);
// index of the block object i rests on, or nullopt when it sits on the table
std::optional<int> supporter_of(const ContinuousState& state, int i,
                                const PhysicsConfig& cfg);
bool is_topmost(const ContinuousState& state, int i, const PhysicsConfig& cfg);
// follows supporters down from i and returns the stack's bottom block
int stack_base(const ContinuousState& state, int i, const PhysicsConfig& cfg);
// true if boxes a and b interpenetrate by more than `tol` on every axis
bool boxes_intersect(const ObjectFeature& a, const ObjectFeature& b,
                     const PhysicsConfig& cfg, double tol = 1e-9);

// --- simulator -------------------------------------------------------------

// One pick-place step. Infeasible grasps (occluded object or out-of-reach
// offset) return the input state unchanged. `rng` is consumed only when
// cfg.noise_sigma > 0 and the grasp is feasible.
ContinuousState step(const ContinuousState& state, const ActionSpec& action,
                     const PhysicsConfig& cfg, Rng& rng);
ContinuousState step_noise_free(const ContinuousState& state,
                                const ActionSpec& action,
                                const PhysicsConfig& cfg);

// all 9n^2 grounded actions, canonical order
std::vector<ActionSpec> legal_actions(int n);
std::vector<ActionSpec> legal_actions(const ContinuousState& state);

bool is_success(const ContinuousState& final_state,
                const ContinuousState& goal, double epsilon,
                SuccessMetric metric = SuccessMetric::PerObject);

// --- data collection & problem generation ----------------------------------

struct CollectConfig {
  std::uint64_t num_samples = 0;
  std::vector<int> n_range = {2, 3, 4};
  int episode_length = 10;
  PhysicsConfig physics;
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Random-exploration episodes, concatenated by episode index; per-episode
// streams come from derive_seed(seed, "episode/<idx>") so results are
// independent of the job count.
std::vector<Transition> collect_dataset(const CollectConfig& cfg);

struct ProblemGenConfig {
  PhysicsConfig physics;
  double epsilon = 0.05;
  double margin = 0.12;          // init positions stay this far from the edge
  double min_gap = 0.01;         // lateral clearance between initial blocks
  double min_action_move = 0.01; // each goal-building action must move this much
  int max_attempts = 1000;
};

// init: random types, non-overlapping on-table positions; goal: the state
// after k random actions, rejection-sampled so the Problem invariant holds.
Problem generate_problem(int n, int k, std::uint64_t seed,
                         const ProblemGenConfig& cfg);

// --- dataset file format ----------------------------------------------------

// Line-delimited: one JSON header line (schema version, n-range, seed,
// physics, symbolic bit-string layout note), then one JSON record per
// transition with flat arrays `pre`, `action`, `post`, `effect`.
void write_transitions(std::ostream& out, const std::vector<Transition>& data,
                       const CollectConfig& cfg);
void write_transitions_file(const std::string& path,
                            const std::vector<Transition>& data,
                            const CollectConfig& cfg);
std::vector<Transition> read_transitions(std::istream& in);
std::vector<Transition> read_transitions_file(const std::string& path);

// problem files are single JSON documents
void write_problem_file(const std::string& path, const Problem& p);
Problem read_problem_file(const std::string& path);
std::string problem_to_json(const Problem& p);
Problem problem_from_json(const std::string& text);

}  // namespace bilevel

#endif
