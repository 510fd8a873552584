#ifndef BILEVEL_OPERATORS_HPP
#define BILEVEL_OPERATORS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bilevel/abstraction.hpp"
#include "bilevel/world.hpp"

namespace bilevel {

// Lifted operators mention only the two action arguments: ?x (picked) and
// ?y (target). Self-placements (?x == ?y) form a separate parameter pattern.
enum class ParamPattern : std::uint8_t { Pair = 0, Self = 1 };

// Fixed literal vocabulary for one parameter pattern. Literal indices are the
// canonical ordering (predicate id major, argument tuple minor):
//   pair: u0(?x) u0(?y) u1(?x) u1(?y) ... r0(?x,?y) r0(?y,?x) r1(?x,?y) ...
//   self: u0(?x) u1(?x) ...
struct LiteralVocabulary {
  int d_z = 0;
  int K = 0;
  ParamPattern pattern = ParamPattern::Pair;

  int size() const {
    return pattern == ParamPattern::Pair ? 2 * d_z + 2 * K : d_z;
  }
  bool is_unary(int idx) const {
    return pattern == ParamPattern::Self || idx < 2 * d_z;
  }
  int predicate(int idx) const {
    if (pattern == ParamPattern::Self) return idx;
    return idx < 2 * d_z ? idx / 2 : d_z + (idx - 2 * d_z) / 2;
  }
  // 0: ?x (or (?x,?y) for relational), 1: ?y (or (?y,?x))
  int arg_variant(int idx) const {
    return pattern == ParamPattern::Self ? 0 : idx % 2;
  }
  std::string literal_name(int idx, const Encoder& enc) const;
};

struct LiftedLiteral {
  int vocab_index = 0;
  bool positive = true;
};

// One lifted symbolic interaction record: the closed-world pre-state of the
// action arguments plus the (add, del) set differences, all as bit masks over
// the pattern's vocabulary.
struct SymbolicTransition {
  ParamPattern pattern = ParamPattern::Pair;
  int pick_offset = 0;
  int place_offset = 0;
  std::uint32_t pre_bits = 0;
  std::uint32_t add_bits = 0;
  std::uint32_t del_bits = 0;

  bool operator==(const SymbolicTransition&) const = default;
};

struct EffectBranch {
  std::uint32_t add_bits = 0;
  std::uint32_t del_bits = 0;
  double probability = 0.0;
  std::uint64_t support = 0;  // raw empirical frequency before normalization
};

struct Operator {
  std::string name;
  ParamPattern pattern = ParamPattern::Pair;
  int pick_offset = 0;
  int place_offset = 0;
  std::uint32_t pre_bits = 0;  // closed-world total assignment
  std::vector<EffectBranch> branches;

  LiteralVocabulary vocab(int d_z, int K) const {
    return {d_z, K, pattern};
  }
  bool deterministic() const { return branches.size() == 1; }
};

struct SampledDomain {
  std::vector<Operator> operators;  // one branch each
  int sample_index = 0;
  std::vector<int> branch_choice;   // per source operator, for diagnostics
};

struct MiningConfig {
  std::uint64_t min_support = 5;  // prune branches observed fewer times
  double min_fraction = 0.01;     // ... or below this share of the group
};

// canonical "+lit,-lit,..." encoding of an effect, used for tie-breaking,
// deduplication, and text emission
std::string effect_key(const LiteralVocabulary& vocab, std::uint32_t add_bits,
                       std::uint32_t del_bits, const Encoder& enc);

std::vector<SymbolicTransition> symbolize(const std::vector<Transition>& data,
                                          const Encoder& enc);

// Groups records by (pattern, offsets, pre-state), counts distinct effects,
// prunes low-support branches, renormalizes, and names the operators.
// Output order and naming are canonical: (pattern, offsets, pre bits).
std::vector<Operator> mine(const std::vector<SymbolicTransition>& records,
                           const Encoder& enc, MiningConfig cfg = {});

// keep only the most probable branch of each operator (probability reset to
// 1.0); ties broken by the lexicographically smaller canonical effect key
std::vector<Operator> deterministic_projection(
    const std::vector<Operator>& ops, const Encoder& enc);

std::vector<SampledDomain> sample_domains(const std::vector<Operator>& ops,
                                          int count, std::uint64_t seed);

// text form: one operator per block (name, pattern, offsets, preconditions,
// branches with probabilities and supports)
std::string operators_to_text(const std::vector<Operator>& ops,
                              const Encoder& enc);
std::vector<Operator> operators_from_text(const std::string& text,
                                          const Encoder& enc);
void write_operators_file(const std::string& path,
                          const std::vector<Operator>& ops,
                          const Encoder& enc);
std::vector<Operator> read_operators_file(const std::string& path,
                                          const Encoder& enc);

}  // namespace bilevel

#endif
