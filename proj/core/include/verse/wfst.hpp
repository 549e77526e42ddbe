#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace verse::fst {

inline constexpr int kEpsilon = 0;

/// Symbol <-> id map; id 0 is always "<eps>".
class SymbolTable {
 public:
  SymbolTable();

  int add(const std::string& symbol);
  /// -1 when absent.
  int find(const std::string& symbol) const;
  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(symbols_.size()); }

  friend bool operator==(const SymbolTable& a, const SymbolTable& b) { return a.symbols_ == b.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int> ids_;
};

struct Arc {
  int ilabel = kEpsilon;
  int olabel = kEpsilon;
  double weight = 0.0;
  int next = -1;
};

/// Weighted transducer over the tropical semiring. Weights are finite and
/// non-negative; an infinite weight is expressed by leaving the arc or final
/// weight out.
class Wfst {
 public:
  Wfst() = default;
  Wfst(SymbolTable input, SymbolTable output) : isyms_(std::move(input)), osyms_(std::move(output)) {}

  int add_state();
  void set_start(int state);
  void set_final(int state, double weight = 0.0);
  void add_arc(int state, const Arc& arc);

  int start() const { return start_; }
  int num_states() const { return static_cast<int>(arcs_.size()); }
  const std::vector<Arc>& arcs(int state) const { return arcs_.at(static_cast<std::size_t>(state)); }
  std::optional<double> final_weight(int state) const;
  const std::map<int, double>& finals() const { return finals_; }
  std::size_t num_arcs() const;

  const SymbolTable& input_symbols() const { return isyms_; }
  const SymbolTable& output_symbols() const { return osyms_; }
  SymbolTable& mutable_input_symbols() { return isyms_; }
  SymbolTable& mutable_output_symbols() { return osyms_; }

  bool input_has_epsilon() const;
  bool output_has_epsilon() const;

  /// One line per arc, `src dst in out weight`, then one `state weight` line
  /// per final state. Arcs of the start state come first so that the source
  /// of the first line is the start state.
  std::string to_text() const;
  static Wfst from_text(const std::string& text);

 private:
  SymbolTable isyms_;
  SymbolTable osyms_;
  std::vector<std::vector<Arc>> arcs_;
  std::map<int, double> finals_;
  int start_ = -1;
};

/// Keeps the states that are reachable from the start and can reach a final
/// state, renumbered in their original order.
Wfst trim(const Wfst& machine);

/// Product construction. The output alphabet of `a` must equal the input
/// alphabet of `b`, and epsilons may appear on at most one of those two
/// tapes; the result is trimmed.
Wfst compose(const Wfst& a, const Wfst& b);

struct Path {
  double weight = 0.0;
  std::vector<int> input;   // epsilons removed
  std::vector<int> output;  // epsilons removed
};

/// Dijkstra over tropical weights including final weights; ties resolve to
/// the lower state id, then the lower arc index.
std::optional<Path> shortest_path(const Wfst& machine);

std::string label_string(const SymbolTable& symbols, const std::vector<int>& labels);

}  // namespace verse::fst
