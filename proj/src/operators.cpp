#include "bilevel/operators.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bilevel/rng.hpp"

namespace bilevel {

std::string LiteralVocabulary::literal_name(int idx, const Encoder& enc) const {
  const int pred = predicate(idx);
  const int variant = arg_variant(idx);
  if (is_unary(idx)) {
    return enc.unary_name(pred) + (variant == 0 ? "(?x)" : "(?y)");
  }
  return enc.relational_name(pred - d_z) +
         (variant == 0 ? "(?x,?y)" : "(?y,?x)");
}

std::string effect_key(const LiteralVocabulary& vocab, std::uint32_t add_bits,
                       std::uint32_t del_bits, const Encoder& enc) {
  std::string out;
  for (int i = 0; i < vocab.size(); ++i) {
    std::uint32_t bit = 1u << i;
    if (add_bits & bit) {
      if (!out.empty()) out += ';';
      out += '+' + vocab.literal_name(i, enc);
    } else if (del_bits & bit) {
      if (!out.empty()) out += ';';
      out += '-' + vocab.literal_name(i, enc);
    }
  }
  return out;
}

namespace {

// bits of the lifted state restricted to the argument objects, in vocabulary
// order
std::uint32_t lift_bits(const SymbolicState& sym, int x, int y,
                        ParamPattern pattern) {
  std::uint32_t bits = 0;
  int pos = 0;
  if (pattern == ParamPattern::Self) {
    for (int d = 0; d < sym.d_z; ++d, ++pos)
      if (sym.u(x, d)) bits |= 1u << pos;
    return bits;
  }
  for (int d = 0; d < sym.d_z; ++d) {
    if (sym.u(x, d)) bits |= 1u << pos;
    ++pos;
    if (sym.u(y, d)) bits |= 1u << pos;
    ++pos;
  }
  for (int k = 0; k < sym.K; ++k) {
    if (sym.r(k, x, y)) bits |= 1u << pos;
    ++pos;
    if (sym.r(k, y, x)) bits |= 1u << pos;
    ++pos;
  }
  return bits;
}

struct GroupKey {
  ParamPattern pattern;
  int di, dj;
  std::uint32_t pre_bits;
  auto operator<=>(const GroupKey&) const = default;
};

struct EffectPair {
  std::uint32_t add, del;
  auto operator<=>(const EffectPair&) const = default;
};

std::string offset_token(int d) {
  return d < 0 ? "dm" + std::to_string(-d) : "d" + std::to_string(d);
}

}  // namespace

std::vector<SymbolicTransition> symbolize(const std::vector<Transition>& data,
                                          const Encoder& enc) {
  std::vector<SymbolicTransition> out;
  out.reserve(data.size());
  for (const auto& tr : data) {
    const int x = tr.action.pick_index;
    const int y = tr.action.place_index;
    SymbolicState pre = enc.encode(tr.pre);
    SymbolicState post = enc.encode(tr.post);
    SymbolicTransition rec;
    rec.pattern = x == y ? ParamPattern::Self : ParamPattern::Pair;
    rec.pick_offset = tr.action.pick_offset;
    rec.place_offset = tr.action.place_offset;
    rec.pre_bits = lift_bits(pre, x, y, rec.pattern);
    std::uint32_t post_bits = lift_bits(post, x, y, rec.pattern);
    rec.add_bits = post_bits & ~rec.pre_bits;
    rec.del_bits = rec.pre_bits & ~post_bits;
    out.push_back(rec);
  }
  return out;
}

std::vector<Operator> mine(const std::vector<SymbolicTransition>& records,
                           const Encoder& enc, MiningConfig cfg) {
  std::map<GroupKey, std::map<EffectPair, std::uint64_t>> groups;
  for (const auto& r : records) {
    groups[{r.pattern, r.pick_offset, r.place_offset, r.pre_bits}]
          [{r.add_bits, r.del_bits}]++;
  }

  std::vector<Operator> ops;
  int name_counter = 0;
  for (const auto& [key, outcomes] : groups) {
    std::uint64_t total = 0;
    for (const auto& [eff, count] : outcomes) total += count;

    LiteralVocabulary vocab{enc.unary_arity(), enc.relational_heads(),
                            key.pattern};
    std::vector<EffectBranch> kept;
    std::uint64_t kept_total = 0;
    for (const auto& [eff, count] : outcomes) {
      if (count < cfg.min_support) continue;
      if (static_cast<double>(count) < cfg.min_fraction * total) continue;
      kept.push_back({eff.add, eff.del, 0.0, count});
      kept_total += count;
    }
    if (kept.empty()) continue;
    for (auto& b : kept)
      b.probability = static_cast<double>(b.support) / kept_total;
    std::sort(kept.begin(), kept.end(), [&](const auto& a, const auto& b) {
      if (a.probability != b.probability) return a.probability > b.probability;
      return effect_key(vocab, a.add_bits, a.del_bits, enc) <
             effect_key(vocab, b.add_bits, b.del_bits, enc);
    });

    Operator op;
    op.pattern = key.pattern;
    op.pick_offset = key.di;
    op.place_offset = key.dj;
    op.pre_bits = key.pre_bits;
    op.branches = std::move(kept);
    op.name = "pick-place_" + offset_token(key.di) + "_" +
              offset_token(key.dj) + "_g" + std::to_string(name_counter++);
    ops.push_back(std::move(op));
  }
  return ops;
}

std::vector<Operator> deterministic_projection(
    const std::vector<Operator>& ops, const Encoder& enc) {
  std::vector<Operator> out;
  out.reserve(ops.size());
  for (const auto& op : ops) {
    LiteralVocabulary vocab =
        op.vocab(enc.unary_arity(), enc.relational_heads());
    const EffectBranch* best = &op.branches.front();
    for (const auto& b : op.branches) {
      if (b.probability > best->probability) {
        best = &b;
      } else if (b.probability == best->probability &&
                 effect_key(vocab, b.add_bits, b.del_bits, enc) <
                     effect_key(vocab, best->add_bits, best->del_bits, enc)) {
        best = &b;
      }
    }
    Operator proj = op;
    proj.branches = {{best->add_bits, best->del_bits, 1.0, best->support}};
    out.push_back(std::move(proj));
  }
  return out;
}

std::vector<SampledDomain> sample_domains(const std::vector<Operator>& ops,
                                          int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_domains: count >= 1");
  std::vector<SampledDomain> domains(count);
  for (int d = 0; d < count; ++d) {
    Rng rng = derive_rng(seed, "domain/" + std::to_string(d));
    SampledDomain& dom = domains[d];
    dom.sample_index = d;
    dom.operators.reserve(ops.size());
    dom.branch_choice.reserve(ops.size());
    for (const auto& op : ops) {
      int choice = 0;
      if (op.branches.size() > 1) {
        double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t b = 0; b < op.branches.size(); ++b) {
          acc += op.branches[b].probability;
          if (u < acc) {
            choice = static_cast<int>(b);
            break;
          }
          choice = static_cast<int>(b);  // numeric slack: keep the last
        }
      }
      Operator det = op;
      const EffectBranch& picked = op.branches[choice];
      det.branches = {{picked.add_bits, picked.del_bits, 1.0, picked.support}};
      dom.operators.push_back(std::move(det));
      dom.branch_choice.push_back(choice);
    }
  }
  return domains;
}

// --- text serialization -----------------------------------------------------

namespace {

std::string precondition_text(const Operator& op, const Encoder& enc) {
  LiteralVocabulary vocab = op.vocab(enc.unary_arity(), enc.relational_heads());
  std::string out;
  for (int i = 0; i < vocab.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += (op.pre_bits & (1u << i)) ? '+' : '-';
    out += vocab.literal_name(i, enc);
  }
  return out;
}

int parse_offset_token(const std::string& tok) {
  if (tok.rfind("dm", 0) == 0) return -std::stoi(tok.substr(2));
  if (tok.rfind('d', 0) == 0) return std::stoi(tok.substr(1));
  throw std::invalid_argument("bad offset token: " + tok);
}

// build a name->index map for the vocabulary so text files parse back
std::map<std::string, int> vocab_index(const LiteralVocabulary& vocab,
                                       const Encoder& enc) {
  std::map<std::string, int> m;
  for (int i = 0; i < vocab.size(); ++i) m[vocab.literal_name(i, enc)] = i;
  return m;
}

}  // namespace

std::string operators_to_text(const std::vector<Operator>& ops,
                              const Encoder& enc) {
  std::ostringstream out;
  out << "operators 1\n";
  for (const auto& op : ops) {
    LiteralVocabulary vocab =
        op.vocab(enc.unary_arity(), enc.relational_heads());
    out << "operator " << op.name << "\n";
    out << "  pattern " << (op.pattern == ParamPattern::Pair ? "pair" : "self")
        << "\n";
    out << "  offsets " << op.pick_offset << " " << op.place_offset << "\n";
    out << "  pre " << precondition_text(op, enc) << "\n";
    for (const auto& b : op.branches) {
      char prob[32];
      std::snprintf(prob, sizeof(prob), "%.9f", b.probability);
      out << "  branch p=" << prob << " support=" << b.support << " effect="
          << effect_key(vocab, b.add_bits, b.del_bits, enc) << "\n";
    }
    out << "end\n";
  }
  return out.str();
}

std::vector<Operator> operators_from_text(const std::string& text,
                                          const Encoder& enc) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("operators", 0) != 0)
    throw std::runtime_error("bad operators file header");

  std::vector<Operator> ops;
  Operator cur;
  bool open = false;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "operator") {
      cur = Operator{};
      ls >> cur.name;
      open = true;
    } else if (tok == "pattern") {
      std::string p;
      ls >> p;
      cur.pattern = p == "self" ? ParamPattern::Self : ParamPattern::Pair;
    } else if (tok == "offsets") {
      ls >> cur.pick_offset >> cur.place_offset;
    } else if (tok == "pre") {
      LiteralVocabulary vocab{enc.unary_arity(), enc.relational_heads(),
                              cur.pattern};
      auto index = vocab_index(vocab, enc);
      cur.pre_bits = 0;
      std::string item;
      while (ls >> item) {
        bool positive = item[0] == '+';
        auto it = index.find(item.substr(1));
        if (it == index.end())
          throw std::runtime_error("unknown literal: " + item);
        if (positive) cur.pre_bits |= 1u << it->second;
      }
    } else if (tok == "branch") {
      LiteralVocabulary vocab{enc.unary_arity(), enc.relational_heads(),
                              cur.pattern};
      auto index = vocab_index(vocab, enc);
      EffectBranch b;
      std::string field;
      while (ls >> field) {
        if (field.rfind("p=", 0) == 0) {
          b.probability = std::stod(field.substr(2));
        } else if (field.rfind("support=", 0) == 0) {
          b.support = std::stoull(field.substr(8));
        } else if (field.rfind("effect=", 0) == 0) {
          std::istringstream items(field.substr(7));
          std::string item;
          while (std::getline(items, item, ';')) {
            if (item.empty()) continue;
            auto it = index.find(item.substr(1));
            if (it == index.end())
              throw std::runtime_error("unknown literal: " + item);
            if (item[0] == '+')
              b.add_bits |= 1u << it->second;
            else
              b.del_bits |= 1u << it->second;
          }
        }
      }
      cur.branches.push_back(b);
    } else if (tok == "end") {
      if (!open) throw std::runtime_error("stray end in operators file");
      ops.push_back(cur);
      open = false;
    } else {
      throw std::runtime_error("unknown operators file line: " + line);
    }
  }
  if (open) throw std::runtime_error("unterminated operator block");
  return ops;
}

void write_operators_file(const std::string& path,
                          const std::vector<Operator>& ops,
                          const Encoder& enc) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << operators_to_text(ops, enc);
}

std::vector<Operator> read_operators_file(const std::string& path,
                                          const Encoder& enc) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return operators_from_text(ss.str(), enc);
}

}  // namespace bilevel
