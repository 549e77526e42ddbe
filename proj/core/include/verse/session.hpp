#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "verse/charlm.hpp"
#include "verse/generator.hpp"
#include "verse/lexicon.hpp"
#include "verse/style_model.hpp"

namespace verse::service {

/// Session state as a canonical JSON document plus undo/redo snapshots.
/// Every mutation is a journal entry folded in by apply(); live calls and
/// journal replay go through the same fold.
struct SessionState {
  nlohmann::json doc;
  std::vector<nlohmann::json> undo;
  std::vector<nlohmann::json> redo;
};

/// Folds one journal entry into the state. Throws Error on entries that do
/// not apply (bad candidate id, empty undo stack, ...).
void apply(SessionState& state, const nlohmann::json& entry);

/// Rebuilds a state from its journal entries.
SessionState replay(const std::vector<nlohmann::json>& journal);

/// Spec fields accepted on session creation; unknown keys are rejected.
gen::GenerationSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const gen::GenerationSpec& spec);

/// Bindings as stored in a session document.
gen::Bindings bindings_from_json(const nlohmann::json& j);

nlohmann::json candidate_to_json(const gen::LineCandidate& c, const std::string& id);

/// Renders a session document as `text`, `markdown` or `json`.
std::string export_session(const nlohmann::json& doc, const std::string& format);

/// Immutable models shared by every session.
struct Models {
  lm::LanguageModel lm;
  fst::PronLexicon lexicon;
  std::map<std::string, std::shared_ptr<const style::StyleModel>> styles;
};

/// Sessions with per-session serialization and an append-only JSON-lines
/// journal per session under `dir`.
class SessionManager {
 public:
  /// Replays any journals already present in `dir`.
  SessionManager(std::shared_ptr<const Models> models, std::filesystem::path dir);

  void add_style(const std::string& id, std::shared_ptr<const style::StyleModel> style);
  std::vector<std::string> style_ids() const;
  std::shared_ptr<const style::StyleModel> style(const std::string& id) const;

  /// Body: {style_id, title?, meter, rhyme_scheme, lines?, lambda_terms, ...}.
  nlohmann::json create(const nlohmann::json& request);
  nlohmann::json get(const std::string& id) const;
  std::vector<std::string> list() const;
  /// Stores and returns up to `count` candidates for the next line.
  nlohmann::json request_candidates(const std::string& id, int count);
  /// Body: {candidate_id} or {text}.
  nlohmann::json accept(const std::string& id, const nlohmann::json& request);
  nlohmann::json undo(const std::string& id);
  nlohmann::json redo(const std::string& id);
  std::string export_as(const std::string& id, const std::string& format) const;

  std::filesystem::path journal_path(const std::string& id) const;
  static std::vector<nlohmann::json> read_journal(const std::filesystem::path& path);

 private:
  struct Session {
    mutable std::mutex mutex;
    SessionState state;
    std::unique_ptr<gen::Generator> generator;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  void commit(const std::string& id, Session& s, nlohmann::json entry);
  const gen::Generator& generator_for(Session& s);
  nlohmann::json view(const SessionState& s) const;

  std::shared_ptr<const Models> models_;
  std::filesystem::path dir_;
  mutable std::mutex mutex_;  // guards the maps below
  std::map<std::string, std::shared_ptr<const style::StyleModel>> styles_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t id_salt_;
};

}  // namespace verse::service
