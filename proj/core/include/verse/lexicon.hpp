#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace verse::fst {

/// ARPAbet phonemes; vowels carry a stress digit 0, 1 or 2.
using Pronunciation = std::vector<std::string>;

bool is_vowel(std::string_view phoneme);
/// Stress digit of a vowel phoneme, -1 when it has none.
int stress_digit(std::string_view phoneme);
std::string strip_stress(std::string_view phoneme);

/// word -> pronunciations. Words are stored lowercased.
class PronLexicon {
 public:
  /// Validates and appends a pronunciation (duplicates are ignored).
  void add(const std::string& word, Pronunciation phonemes);

  /// CMU-dict text: `WORD  PH PH PH`, `;;;` comments, variants as `WORD(2)`.
  static PronLexicon parse(std::istream& in);
  static PronLexicon parse(std::string_view text);
  static PronLexicon load(const std::filesystem::path& path);

  bool contains(std::string_view word) const { return entries_.count(std::string(word)) != 0; }
  /// nullptr when the word is unknown.
  const std::vector<Pronunciation>* find(std::string_view word) const;
  /// Throws Error("oov") naming the word.
  const std::vector<Pronunciation>& at(std::string_view word) const;

  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> words() const;

 private:
  std::map<std::string, std::vector<Pronunciation>, std::less<>> entries_;
};

}  // namespace verse::fst
