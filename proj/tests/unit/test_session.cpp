#include <gtest/gtest.h>

#include "support.hpp"
#include "verse/error.hpp"
#include "verse/rng.hpp"
#include "verse/session.hpp"

using namespace verse;
using namespace verse::service;
using nlohmann::json;
using verse::testing::TempDir;

namespace {

std::shared_ptr<Models> toy_models() {
  auto m = std::make_shared<Models>();
  m->lm = verse::testing::toy_lm();
  m->lexicon = verse::testing::toy_lexicon();
  m->styles["toy"] = std::make_shared<style::StyleModel>(verse::testing::toy_style());
  return m;
}

json create_request(const std::string& scheme = "ABAB") {
  return {{"style_id", "toy"},
          {"title", "Night Piece"},
          {"spec", {{"meter", "USUS"}, {"rhyme_scheme", scheme}, {"lambda_terms", 0.5}, {"seed", 3}}}};
}

// The view minus the undo/redo availability flags, which legitimately change.
std::string doc_of(json view) {
  view.erase("can_undo");
  view.erase("can_redo");
  return view.dump();
}

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST(Session, CreateAndView) {
  TempDir dir;
  SessionManager sm(toy_models(), dir.path());
  const auto v = sm.create(create_request());
  EXPECT_EQ(v.at("title"), "Night Piece");
  EXPECT_EQ(v.at("spec").at("lines"), 4);
  EXPECT_EQ(v.at("next_line").at("letter"), "A");
  EXPECT_FALSE(v.at("can_undo"));
  EXPECT_EQ(sm.list().size(), 1u);
  EXPECT_EQ(code_of([&] { sm.create({{"style_id", "nope"}}); }), "unknown_style");
  EXPECT_EQ(code_of([&] { sm.create({{"style_id", "toy"}, {"spec", {{"colour", 1}}}}); }), "invalid_spec");
  EXPECT_EQ(code_of([&] { sm.get("ffff"); }), "unknown_session");
}

TEST(Session, CandidatesAcceptAndStale) {
  TempDir dir;
  SessionManager sm(toy_models(), dir.path());
  const std::string id = sm.create(create_request()).at("id");
  const auto v = sm.request_candidates(id, 3);
  const auto& pending = v.at("pending_candidates");
  ASSERT_GE(pending.size(), 1u);
  EXPECT_EQ(pending[0].at("id"), "c0-0");
  for (const auto& c : pending) {
    EXPECT_EQ(c.at("scansion").size(), c.at("words").size());
    EXPECT_NEAR(c.at("score").get<double>(), c.at("base_logprob").get<double>() + c.at("boost").get<double>(), 1e-12);
  }
  const auto after = sm.accept(id, {{"candidate_id", "c0-0"}});
  EXPECT_EQ(after.at("accepted_lines").size(), 1u);
  EXPECT_TRUE(after.at("pending_candidates").empty());
  EXPECT_TRUE(after.at("rhyme_bindings").contains("A"));
  EXPECT_EQ(code_of([&] { sm.accept(id, {{"candidate_id", "c0-0"}}); }), "stale_candidate");
  EXPECT_EQ(code_of([&] { sm.request_candidates(id, 0); }), "invalid_request");
}

TEST(Session, UndoRedoAreByteIdentical) {
  TempDir dir;
  SessionManager sm(toy_models(), dir.path());
  const std::string id = sm.create(create_request()).at("id");
  const auto before_candidates = sm.get(id);
  const auto with_candidates = sm.request_candidates(id, 5);
  const auto before_accept = sm.get(id);
  const auto accepted = sm.accept(id, {{"candidate_id", "c0-1"}});
  EXPECT_EQ(doc_of(sm.undo(id)), doc_of(before_accept));
  EXPECT_EQ(doc_of(sm.redo(id)), doc_of(accepted));
  sm.undo(id);
  EXPECT_EQ(doc_of(sm.undo(id)), doc_of(before_candidates));
  EXPECT_EQ(code_of([&] { sm.undo(id); }), "nothing_to_undo");
  sm.redo(id);
  json expected = with_candidates;
  expected.erase("stats");
  EXPECT_EQ(doc_of(sm.get(id)), doc_of(expected));
  sm.request_candidates(id, 2);  // a new action clears redo
  EXPECT_EQ(code_of([&] { sm.redo(id); }), "nothing_to_redo");
}

TEST(Session, CustomLineWarnings) {
  TempDir dir;
  SessionManager sm(toy_models(), dir.path());
  const std::string id = sm.create(create_request("AA")).at("id");
  auto v = sm.accept(id, {{"text", "The stars above"}});
  EXPECT_TRUE(v.at("accepted_lines")[0].at("warnings").empty());
  EXPECT_EQ(v.at("accepted_lines")[0].at("text"), "The stars above");
  sm.undo(id);
  v = sm.accept(id, {{"text", "the moon"}});
  EXPECT_EQ(v.at("accepted_lines")[0].at("warnings").size(), 1u);  // oov
  v = sm.accept(id, {{"text", "remember night"}});
  // USU+S scans as USUS, but night does not rhyme with moon
  const auto& w = v.at("accepted_lines")[1].at("warnings");
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].get<std::string>().find("rhyme"), std::string::npos);
  EXPECT_TRUE(v.at("complete"));
  EXPECT_EQ(code_of([&] { sm.accept(id, {{"text", "the night"}}); }), "poem_complete");
  EXPECT_EQ(code_of([&] { sm.request_candidates(id, 1); }), "poem_complete");
}

TEST(Session, GeneratedLinesRhyme) {
  TempDir dir;
  SessionManager sm(toy_models(), dir.path());
  const std::string id = sm.create(create_request("AA")).at("id");
  for (int i = 0; i < 2; ++i) {
    const auto v = sm.request_candidates(id, 3);
    sm.accept(id, {{"candidate_id", v.at("pending_candidates")[0].at("id")}});
  }
  const auto lines = sm.get(id).at("accepted_lines");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_TRUE(fst::rhyme_check(lines[0].at("words").back().get<std::string>(),
                               lines[1].at("words").back().get<std::string>(), verse::testing::toy_lexicon()));
}

// Random action sequences: after each action, folding the journal gives the
// live state, and a fresh manager over the same directory agrees.
TEST(Session, JournalReplayProperty) {
  TempDir dir;
  auto models = toy_models();
  std::vector<std::string> ids;
  {
    SessionManager sm(models, dir.path());
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      Rng rng(seed);
      const std::string id = sm.create(create_request(seed % 2 ? "ABAB" : "AA")).at("id");
      ids.push_back(id);
      for (int step = 0; step < 14; ++step) {
        const auto op = rng.below(5);
        try {
          if (op == 0) {
            sm.request_candidates(id, 1 + static_cast<int>(rng.below(4)));
          } else if (op == 1) {
            const auto pending = sm.get(id).at("pending_candidates");
            if (!pending.empty()) sm.accept(id, {{"candidate_id", pending[rng.below(pending.size())].at("id")}});
          } else if (op == 2) {
            sm.undo(id);
          } else if (op == 3) {
            sm.redo(id);
          } else {
            sm.accept(id, {{"text", "the night above"}});
          }
        } catch (const Error&) {
          // refused actions must leave no journal entry
        }
        const auto st = replay(SessionManager::read_journal(sm.journal_path(id)));
        const auto live = sm.get(id);
        EXPECT_EQ(doc_of(live), doc_of([&] {
                    json v = st.doc;
                    for (const auto& k : {"complete", "next_line"}) v[k] = live.at(k);
                    return v;
                  }()));
        EXPECT_EQ(live.at("can_undo").get<bool>(), !st.undo.empty());
        EXPECT_EQ(live.at("can_redo").get<bool>(), !st.redo.empty());
      }
    }
  }
  SessionManager reopened(models, dir.path());
  EXPECT_EQ(reopened.list().size(), ids.size());
  SessionManager again(models, dir.path());
  for (const auto& id : ids) EXPECT_EQ(again.get(id).dump(), reopened.get(id).dump());
}

TEST(Session, ExportFormats) {
  TempDir dir;
  SessionManager sm(toy_models(), dir.path());
  const std::string id = sm.create(create_request("AA")).at("id");
  sm.accept(id, {{"text", "the stars above"}});
  sm.accept(id, {{"text", "the bars above"}});
  EXPECT_EQ(sm.export_as(id, "text"), "Night Piece\n\nthe stars above\nthe bars above\n");
  EXPECT_EQ(sm.export_as(id, "markdown"), "# Night Piece\n\nthe stars above  \nthe bars above\n");
  const auto j = json::parse(sm.export_as(id, "json"));
  EXPECT_EQ(j.at("accepted_lines").size(), 2u);
  EXPECT_EQ(j.at("id"), id);
  EXPECT_EQ(code_of([&] { sm.export_as(id, "pdf"); }), "invalid_format");
}

TEST(Session, SpecJsonRoundTrip) {
  const auto spec = spec_from_json({{"meter", "common-meter"}, {"rhyme_scheme", "ABAB"}, {"beam_width", 8}});
  EXPECT_EQ(spec.beam_width, 8);
  const auto back = spec_from_json(spec_to_json(spec));
  EXPECT_EQ(spec_to_json(back), spec_to_json(spec));
}
