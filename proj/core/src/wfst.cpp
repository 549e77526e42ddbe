#include "verse/wfst.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <sstream>

#include "verse/error.hpp"
#include "verse/decimal.hpp"

namespace verse::fst {

SymbolTable::SymbolTable() { add("<eps>"); }

int SymbolTable::add(const std::string& symbol) {
  const auto it = ids_.find(symbol);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(symbols_.size());
  symbols_.push_back(symbol);
  ids_.emplace(symbol, id);
  return id;
}

int SymbolTable::find(const std::string& symbol) const {
  const auto it = ids_.find(symbol);
  return it == ids_.end() ? -1 : it->second;
}

namespace {

void check_weight(double w) {
  if (!std::isfinite(w) || w < 0.0) throw Error("invalid_weight", "weights must be finite and non-negative");
}

}  // namespace

int Wfst::add_state() {
  arcs_.emplace_back();
  return num_states() - 1;
}

void Wfst::set_start(int state) {
  if (state < 0 || state >= num_states()) throw Error("invalid_state", "start state out of range");
  start_ = state;
}

void Wfst::set_final(int state, double weight) {
  if (state < 0 || state >= num_states()) throw Error("invalid_state", "final state out of range");
  check_weight(weight);
  finals_[state] = weight;
}

void Wfst::add_arc(int state, const Arc& arc) {
  if (state < 0 || state >= num_states() || arc.next < 0 || arc.next >= num_states()) {
    throw Error("invalid_state", "arc references a missing state");
  }
  if (arc.ilabel < 0 || arc.ilabel >= isyms_.size() || arc.olabel < 0 || arc.olabel >= osyms_.size()) {
    throw Error("invalid_symbol", "arc label outside the symbol table");
  }
  check_weight(arc.weight);
  arcs_[static_cast<std::size_t>(state)].push_back(arc);
}

std::optional<double> Wfst::final_weight(int state) const {
  const auto it = finals_.find(state);
  if (it == finals_.end()) return std::nullopt;
  return it->second;
}

std::size_t Wfst::num_arcs() const {
  std::size_t n = 0;
  for (const auto& a : arcs_) n += a.size();
  return n;
}

bool Wfst::input_has_epsilon() const {
  for (const auto& list : arcs_) {
    for (const auto& a : list) {
      if (a.ilabel == kEpsilon) return true;
    }
  }
  return false;
}

bool Wfst::output_has_epsilon() const {
  for (const auto& list : arcs_) {
    for (const auto& a : list) {
      if (a.olabel == kEpsilon) return true;
    }
  }
  return false;
}

std::string Wfst::to_text() const {
  std::ostringstream out;
  std::vector<int> order;
  if (start_ >= 0) order.push_back(start_);
  for (int s = 0; s < num_states(); ++s) {
    if (s != start_) order.push_back(s);
  }
  for (int s : order) {
    for (const auto& a : arcs(s)) {
      out << s << ' ' << a.next << ' ' << isyms_.symbol(a.ilabel) << ' ' << osyms_.symbol(a.olabel) << ' '
          << format_decimal(a.weight) << '\n';
    }
  }
  for (const auto& [s, w] : finals_) out << s << ' ' << format_decimal(w) << '\n';
  return out.str();
}

Wfst Wfst::from_text(const std::string& text) {
  Wfst m;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  auto ensure = [&](int s) {
    if (s < 0) throw Error("invalid_state", "negative state id in machine text");
    while (m.num_states() <= s) m.add_state();
  };
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::vector<std::string> f;
    for (std::string tok; fields >> tok;) f.push_back(tok);
    if (f.empty()) continue;
    if (f.size() == 5) {
      const int src = std::stoi(f[0]), dst = std::stoi(f[1]);
      ensure(std::max(src, dst));
      if (first) m.set_start(src);
      first = false;
      m.add_arc(src, Arc{m.isyms_.add(f[2]), m.osyms_.add(f[3]), parse_decimal(f[4]), dst});
    } else if (f.size() == 2 || f.size() == 1) {
      const int s = std::stoi(f[0]);
      ensure(s);
      if (first) m.set_start(s);
      first = false;
      m.set_final(s, f.size() == 2 ? parse_decimal(f[1]) : 0.0);
    } else {
      throw Error("invalid_machine_text", "cannot parse machine line: " + line);
    }
  }
  return m;
}

Wfst trim(const Wfst& machine) {
  const int n = machine.num_states();
  Wfst out(machine.input_symbols(), machine.output_symbols());
  if (machine.start() < 0 || n == 0) return out;

  std::vector<char> accessible(n, 0), coaccessible(n, 0);
  std::deque<int> queue{machine.start()};
  accessible[machine.start()] = 1;
  std::vector<std::vector<int>> reverse(n);
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    for (const auto& a : machine.arcs(s)) {
      reverse[a.next].push_back(s);
      if (!accessible[a.next]) {
        accessible[a.next] = 1;
        queue.push_back(a.next);
      }
    }
  }
  for (const auto& [s, w] : machine.finals()) {
    if (accessible[s] && !coaccessible[s]) {
      coaccessible[s] = 1;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    for (int p : reverse[s]) {
      if (!coaccessible[p]) {
        coaccessible[p] = 1;
        queue.push_back(p);
      }
    }
  }
  if (!coaccessible[machine.start()]) return out;

  std::vector<int> remap(n, -1);
  for (int s = 0; s < n; ++s) {
    if (accessible[s] && coaccessible[s]) remap[s] = out.add_state();
  }
  out.set_start(remap[machine.start()]);
  for (int s = 0; s < n; ++s) {
    if (remap[s] < 0) continue;
    for (const auto& a : machine.arcs(s)) {
      if (remap[a.next] >= 0) out.add_arc(remap[s], Arc{a.ilabel, a.olabel, a.weight, remap[a.next]});
    }
    if (auto w = machine.final_weight(s)) out.set_final(remap[s], *w);
  }
  return out;
}

Wfst compose(const Wfst& a, const Wfst& b) {
  if (!(a.output_symbols() == b.input_symbols())) {
    throw Error("alphabet_mismatch", "output alphabet of the left machine differs from input alphabet of the right");
  }
  const bool a_eps = a.output_has_epsilon();
  const bool b_eps = b.input_has_epsilon();
  if (a_eps && b_eps) {
    throw Error("unsupported_epsilon", "epsilons on both matching tapes need an epsilon filter (not supported)");
  }

  Wfst out(a.input_symbols(), b.output_symbols());
  if (a.start() < 0 || b.start() < 0) return out;

  // b's arcs grouped by input label, per state.
  std::vector<std::map<int, std::vector<const Arc*>>> b_index(static_cast<std::size_t>(b.num_states()));
  for (int s = 0; s < b.num_states(); ++s) {
    for (const auto& arc : b.arcs(s)) b_index[s][arc.ilabel].push_back(&arc);
  }

  std::map<std::pair<int, int>, int> ids;
  std::deque<std::pair<int, int>> queue;
  auto state_of = [&](int sa, int sb) {
    const auto [it, inserted] = ids.emplace(std::make_pair(sa, sb), 0);
    if (inserted) {
      it->second = out.add_state();
      queue.emplace_back(sa, sb);
    }
    return it->second;
  };
  out.set_start(state_of(a.start(), b.start()));

  while (!queue.empty()) {
    const auto [sa, sb] = queue.front();
    queue.pop_front();
    const int src = ids.at({sa, sb});
    for (const auto& ea : a.arcs(sa)) {
      if (ea.olabel == kEpsilon) {
        out.add_arc(src, Arc{ea.ilabel, kEpsilon, ea.weight, state_of(ea.next, sb)});
        continue;
      }
      const auto it = b_index[sb].find(ea.olabel);
      if (it == b_index[sb].end()) continue;
      for (const Arc* eb : it->second) {
        out.add_arc(src, Arc{ea.ilabel, eb->olabel, ea.weight + eb->weight, state_of(ea.next, eb->next)});
      }
    }
    if (b_eps) {
      const auto it = b_index[sb].find(kEpsilon);
      if (it != b_index[sb].end()) {
        for (const Arc* eb : it->second) {
          out.add_arc(src, Arc{kEpsilon, eb->olabel, eb->weight, state_of(sa, eb->next)});
        }
      }
    }
    const auto fa = a.final_weight(sa);
    const auto fb = b.final_weight(sb);
    if (fa && fb) out.set_final(src, *fa + *fb);
  }
  return trim(out);
}

std::optional<Path> shortest_path(const Wfst& machine) {
  const int n = machine.num_states();
  if (machine.start() < 0 || n == 0) return std::nullopt;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<int> parent_state(n, -1), parent_arc(n, -1);
  std::vector<char> done(n, 0);

  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[machine.start()] = 0.0;
  queue.emplace(0.0, machine.start());
  while (!queue.empty()) {
    const auto [d, s] = queue.top();
    queue.pop();
    if (done[s]) continue;
    done[s] = 1;
    const auto& arcs = machine.arcs(s);
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      const auto& a = arcs[i];
      const double nd = d + a.weight;
      if (nd < dist[a.next]) {
        dist[a.next] = nd;
        parent_state[a.next] = s;
        parent_arc[a.next] = static_cast<int>(i);
        queue.emplace(nd, a.next);
      }
    }
  }

  int best = -1;
  double best_weight = inf;
  for (const auto& [s, w] : machine.finals()) {
    if (dist[s] + w < best_weight) {
      best_weight = dist[s] + w;
      best = s;
    }
  }
  if (best < 0) return std::nullopt;

  Path path;
  path.weight = best_weight;
  // The start state never gets a parent: its distance is 0 and weights are
  // non-negative.
  for (int s = best; parent_state[s] >= 0; s = parent_state[s]) {
    const auto& a = machine.arcs(parent_state[s])[static_cast<std::size_t>(parent_arc[s])];
    if (a.ilabel != kEpsilon) path.input.push_back(a.ilabel);
    if (a.olabel != kEpsilon) path.output.push_back(a.olabel);
  }
  std::reverse(path.input.begin(), path.input.end());
  std::reverse(path.output.begin(), path.output.end());
  return path;
}

std::string label_string(const SymbolTable& symbols, const std::vector<int>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out.push_back(' ');
    out += symbols.symbol(labels[i]);
  }
  return out;
}

}  // namespace verse::fst
