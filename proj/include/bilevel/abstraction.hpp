#ifndef BILEVEL_ABSTRACTION_HPP
#define BILEVEL_ABSTRACTION_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bilevel/world.hpp"

namespace bilevel {

// Boolean scene abstraction: per-object unary bits (n x d_z) plus K
// relational bit matrices (K x n x n).
struct SymbolicState {
  int n = 0;
  int d_z = 0;
  int K = 0;
  std::vector<std::uint8_t> unary;       // [i * d_z + d]
  std::vector<std::uint8_t> relational;  // [(k * n + i) * n + j]

  std::uint8_t& u(int i, int d) { return unary[i * d_z + d]; }
  std::uint8_t u(int i, int d) const { return unary[i * d_z + d]; }
  std::uint8_t& r(int k, int i, int j) {
    return relational[(k * n + i) * n + j];
  }
  std::uint8_t r(int k, int i, int j) const {
    return relational[(k * n + i) * n + j];
  }

  bool operator==(const SymbolicState&) const = default;

  // row-major unary then head-major relational, as '0'/'1' characters
  std::string to_bitstring() const;
  static SymbolicState from_bitstring(int n, int d_z, int K,
                                      const std::string& bits);
};

// Pluggable state abstraction. The reference discretizer below stands in for
// a learned encoder; anything honoring this interface can replace it without
// touching operator mining or planning.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual int unary_arity() const = 0;       // d_z
  virtual int relational_heads() const = 0;  // K
  virtual std::string unary_name(int d) const = 0;
  virtual std::string relational_name(int k) const = 0;
  virtual SymbolicState encode(const ContinuousState& state) const = 0;
};

struct AbstractionConfig {
  double on_table_tol = 0.005;  // |z - half| below this counts as on-table
  double on_z_tol = 0.005;      // base-to-top gap for the "on" head
  double clear_z_tol = 0.005;   // same, for occupancy of a block's top face
  double near_scale = 2.0;      // near threshold = near_scale * large_edge
};

// d_z = 3 unary bits (is-large, on-table, clear) and K = 2 relational heads
// (on, near), computed from block geometry.
class ReferenceEncoder : public Encoder {
 public:
  ReferenceEncoder(PhysicsConfig physics, AbstractionConfig cfg = {})
      : phys_(physics), cfg_(cfg) {}

  int unary_arity() const override { return 3; }
  int relational_heads() const override { return 2; }
  std::string unary_name(int d) const override;
  std::string relational_name(int k) const override;
  SymbolicState encode(const ContinuousState& state) const override;

  const PhysicsConfig& physics() const { return phys_; }
  const AbstractionConfig& config() const { return cfg_; }

 private:
  PhysicsConfig phys_;
  AbstractionConfig cfg_;
};

std::pair<SymbolicState, SymbolicState> encode_problem(const Problem& problem,
                                                       const Encoder& enc);

}  // namespace bilevel

#endif
