#include "bilevel/abstraction.hpp"

#include <cmath>
#include <stdexcept>

namespace bilevel {

std::string SymbolicState::to_bitstring() const {
  std::string s;
  s.reserve(unary.size() + relational.size());
  for (auto b : unary) s.push_back(b ? '1' : '0');
  for (auto b : relational) s.push_back(b ? '1' : '0');
  return s;
}

SymbolicState SymbolicState::from_bitstring(int n, int d_z, int K,
                                            const std::string& bits) {
  SymbolicState s;
  s.n = n;
  s.d_z = d_z;
  s.K = K;
  std::size_t need = static_cast<std::size_t>(n) * d_z +
                     static_cast<std::size_t>(K) * n * n;
  if (bits.size() != need)
    throw std::invalid_argument("bitstring length mismatch");
  s.unary.resize(static_cast<std::size_t>(n) * d_z);
  s.relational.resize(static_cast<std::size_t>(K) * n * n);
  for (std::size_t i = 0; i < s.unary.size(); ++i)
    s.unary[i] = bits[i] == '1';
  for (std::size_t i = 0; i < s.relational.size(); ++i)
    s.relational[i] = bits[s.unary.size() + i] == '1';
  return s;
}

std::string ReferenceEncoder::unary_name(int d) const {
  switch (d) {
    case 0: return "is-large";
    case 1: return "on-table";
    case 2: return "clear";
  }
  throw std::out_of_range("unary predicate index");
}

std::string ReferenceEncoder::relational_name(int k) const {
  switch (k) {
    case 0: return "on";
    case 1: return "near";
  }
  throw std::out_of_range("relational head index");
}

SymbolicState ReferenceEncoder::encode(const ContinuousState& state) const {
  const int n = state.size();
  SymbolicState sym;
  sym.n = n;
  sym.d_z = unary_arity();
  sym.K = relational_heads();
  sym.unary.assign(static_cast<std::size_t>(n) * sym.d_z, 0);
  sym.relational.assign(static_cast<std::size_t>(sym.K) * n * n, 0);

  const double near_thresh = cfg_.near_scale * phys_.large_edge;

  for (int i = 0; i < n; ++i) {
    const ObjectFeature& oi = state.objects[i];
    sym.u(i, 0) = oi.is_large;
    sym.u(i, 1) = std::abs(oi.position.z - oi.half(phys_)) < cfg_.on_table_tol;
    bool clear = true;
    for (int j = 0; j < n && clear; ++j) {
      if (j == i) continue;
      const ObjectFeature& oj = state.objects[j];
      if (footprint_overlap_area(oi, oj, phys_) > 1e-12 &&
          std::abs(oj.bottom(phys_) - oi.top(phys_)) < cfg_.clear_z_tol)
        clear = false;
    }
    sym.u(i, 2) = clear;
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const ObjectFeature& oi = state.objects[i];
      const ObjectFeature& oj = state.objects[j];
      // on(i, j): i's base rests on j's top face
      sym.r(0, i, j) =
          oi.position.lateral_distance(oj.position) < oj.half(phys_) &&
          std::abs(oi.bottom(phys_) - oj.top(phys_)) < cfg_.on_z_tol;
      sym.r(1, i, j) =
          oi.position.lateral_distance(oj.position) < near_thresh;
    }
  }
  return sym;
}

std::pair<SymbolicState, SymbolicState> encode_problem(const Problem& problem,
                                                       const Encoder& enc) {
  return {enc.encode(problem.init), enc.encode(problem.goal)};
}

}  // namespace bilevel
