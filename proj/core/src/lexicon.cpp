#include "verse/lexicon.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "verse/error.hpp"

namespace verse::fst {

namespace {

constexpr std::array<std::string_view, 15> kVowels = {"AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
                                                      "EY", "IH", "IY", "OW", "OY", "UH", "UW"};

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string strip_stress(std::string_view phoneme) {
  std::string out(phoneme);
  while (!out.empty() && std::isdigit(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out;
}

bool is_vowel(std::string_view phoneme) {
  const std::string base = strip_stress(phoneme);
  return std::find(kVowels.begin(), kVowels.end(), base) != kVowels.end();
}

int stress_digit(std::string_view phoneme) {
  if (phoneme.empty() || !std::isdigit(static_cast<unsigned char>(phoneme.back()))) return -1;
  return phoneme.back() - '0';
}

void PronLexicon::add(const std::string& word, Pronunciation phonemes) {
  if (word.empty()) throw Error("invalid_pronunciation", "empty lexicon word");
  if (phonemes.empty()) throw Error("invalid_pronunciation", "pronunciation of '" + word + "' has no phonemes");
  for (const auto& ph : phonemes) {
    const int digit = stress_digit(ph);
    if (digit >= 0 && (!is_vowel(ph) || digit > 2 || strip_stress(ph).size() + 1 != ph.size())) {
      throw Error("invalid_pronunciation", "stress digit on non-vowel '" + ph + "' in '" + word + "'");
    }
  }
  auto& list = entries_[lowercase(word)];
  if (std::find(list.begin(), list.end(), phonemes) == list.end()) list.push_back(std::move(phonemes));
}

PronLexicon PronLexicon::parse(std::istream& in) {
  PronLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(";;;", 0) == 0) continue;
    if (const auto hash = line.find(" #"); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    if (word.size() > 3 && word.back() == ')') {
      const auto open = word.rfind('(');
      if (open != std::string::npos && open > 0) word.erase(open);
    }
    Pronunciation ph;
    for (std::string p; fields >> p;) ph.push_back(p);
    lex.add(word, std::move(ph));
  }
  return lex;
}

PronLexicon PronLexicon::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

PronLexicon PronLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot read lexicon " + path.string());
  return parse(in);
}

const std::vector<Pronunciation>* PronLexicon::find(std::string_view word) const {
  const auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

const std::vector<Pronunciation>& PronLexicon::at(std::string_view word) const {
  const auto* p = find(word);
  if (!p) throw Error("oov", "word not in lexicon: " + std::string(word));
  return *p;
}

std::vector<std::string> PronLexicon::words() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [w, p] : entries_) out.push_back(w);
  return out;
}

}  // namespace verse::fst
