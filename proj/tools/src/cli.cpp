#include "verse/cli.hpp"

#include <chrono>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "verse/charlm.hpp"
#include "verse/corpus.hpp"
#include "verse/error.hpp"
#include "verse/evaluation.hpp"
#include "verse/generator.hpp"
#include "verse/server.hpp"
#include "verse/style_model.hpp"

namespace verse::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + p.string());
  out << text;
}

std::vector<std::string> read_word_list(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::string> out;
  for (std::string w; in >> w;) {
    for (auto& t : corpus::tokenize_words(w)) out.push_back(t);
  }
  return out;
}

struct IngestArgs {
  std::string corpus, out, merge, id;
  double ratio = 0.5;
  std::uint64_t seed = 1;
};

struct StyleArgs {
  std::string corpus, background, out;
  style::StyleConfig config;
};

struct TrainArgs {
  std::string corpus, out;
  lm::TrainOptions options;
  int log_every = 50;
};

struct CheckArgs {
  std::string model, text;
  bool gradcheck = false;
  std::uint64_t seed = 1;
};

struct GenerateArgs {
  std::string style, lm, lexicon, meter = "iambic-tetrameter", rhyme, out, vocab;
  int lines = 0, beam = 16, count = 12, samples = 4, budget = 2000;
  double boost_terms = 1.0, boost_topics = 0.5, temp = 0.8, noise = 1.0;
  std::uint64_t seed = 42;
};

struct SurveyArgs {
  std::string in;
  bool json = false;
};

struct BleuArgs {
  std::string candidate, refs;
  int max_n = 4;
};

struct ServeArgs {
  std::string models, host = "127.0.0.1";
  int port = 8080;
};

void print_stats(std::ostream& out, const corpus::Corpus& c) {
  const auto s = c.stats();
  out << c.id() << ": " << s.documents << " documents, " << s.words << " words, " << s.characters
      << " characters, vocabulary " << s.vocabulary_size << '\n';
}

int do_ingest(const IngestArgs& a, std::ostream& out) {
  corpus::Corpus c = corpus::ingest_directory(a.corpus, a.id);
  if (!a.merge.empty()) {
    const corpus::Corpus other = corpus::load_corpus(a.merge);
    c = corpus::merge_corpora(c, other, a.ratio, a.seed);
  }
  corpus::save_corpus(c, a.out);
  print_stats(out, c);
  return 0;
}

int do_style(const StyleArgs& a, std::ostream& out) {
  const auto author = corpus::load_corpus(a.corpus);
  const auto background = corpus::load_corpus(a.background);
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = style::build_style_model(author, background, a.config, [&](std::string_view stage) {
    out << "  " << stage << '\n' << std::flush;
  });
  style::save_style(model, a.out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << "style " << model.author_id << ": " << model.high_entropy_terms.size() << " high-entropy terms, "
      << model.topic_words.size() << " topic words, " << model.expanded_terms.size() << " expanded terms ("
      << std::fixed << std::setprecision(1) << secs << " s)\n";
  return 0;
}

int do_train(TrainArgs a, std::ostream& out) {
  const auto c = corpus::load_corpus(a.corpus);
  a.options.on_step = [&](int step, double loss) {
    if (a.log_every > 0 && (step == 0 || (step + 1) % a.log_every == 0 || step + 1 == a.options.steps)) {
      out << "step " << step + 1 << " loss " << std::fixed << std::setprecision(4) << loss << '\n' << std::flush;
    }
  };
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = lm::train(c, a.options);
  lm::save_model(result.model, a.out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << "saved " << a.out << ": " << result.model.params.parameter_count() << " parameters, vocabulary "
      << result.model.vocab.size() << ", final loss " << std::fixed << std::setprecision(4)
      << result.loss_trace.back() << " (" << std::setprecision(1) << secs << " s)\n";
  return 0;
}

int do_check(const CheckArgs& a, std::ostream& out) {
  const auto model = lm::load_model(a.model);
  model.params.validate();
  const auto& s = model.params.shape;
  out << "model ok: layers " << s.layers << ", hidden " << s.hidden << ", embed " << s.embed << ", vocabulary "
      << s.vocab << ", parameters " << model.params.parameter_count() << '\n';
  if (!a.text.empty()) {
    const auto p = lm::perplexity(model, read_file(a.text));
    out << "perplexity " << std::fixed << std::setprecision(4) << p.perplexity << " (" << p.nats_per_char
        << " nats/char over " << p.characters << " characters)\n";
  }
  lm::SampleOptions so;
  so.greedy = true;
  so.max_chars = 120;
  out << "greedy sample: " << json(lm::sample(model, "", so)).dump() << '\n';
  if (a.gradcheck) {
    // Finite differences on a tiny model over the same vocabulary.
    lm::LstmShape tiny{1, 4, 4, s.vocab};
    const auto params = lm::LstmParams::random(tiny, a.seed, 0.5);
    std::vector<int> ids;
    for (int i = 0; i < 13; ++i) ids.push_back(i % s.vocab);
    const std::span<const int> all(ids);
    const auto r = lm::gradient_check(params, all.first(12), all.subspan(1, 12));
    out << "gradient check: max relative error " << std::scientific << r.max_relative_error << " in "
        << r.worst_group << '[' << r.worst_index << "] over " << r.parameters_checked << " parameters\n";
    if (r.max_relative_error >= 1e-4) return 1;
  }
  return 0;
}

int do_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  const auto style_model = style::load_style(a.style);
  const auto model = lm::load_model(a.lm);
  const auto lexicon = fst::PronLexicon::load(a.lexicon);
  gen::GenerationSpec spec;
  spec.meter = fst::MeterScheme::parse(a.meter);
  spec.rhyme_scheme = a.rhyme;
  spec.line_count = a.lines;
  spec.lambda_terms = a.boost_terms;
  spec.lambda_topics = a.boost_topics;
  spec.temperature = a.temp;
  spec.beam_width = a.beam;
  spec.samples_per_line = a.samples;
  spec.step_budget = a.budget;
  spec.prune_noise = a.noise;
  spec.seed = a.seed;
  if (!a.vocab.empty()) spec.vocabulary = read_word_list(a.vocab);

  const auto t0 = std::chrono::steady_clock::now();
  const gen::Generator generator(model, lexicon, &style_model, spec);
  gen::BatchResult batch = generator.batch_generate(a.count);

  fs::create_directories(a.out);
  int written = 0, invalid = 0;
  for (std::size_t i = 0; i < batch.poemlets.size(); ++i) {
    if (!batch.poemlets[i]) continue;
    const auto& p = *batch.poemlets[i];
    std::vector<std::string> ends;
    bool meter_ok = true;
    for (std::size_t l = 0; l < p.lines.size(); ++l) {
      ends.push_back(p.lines[l].words.back());
      meter_ok = meter_ok && gen::validate_meter(p.lines[l].words, spec.meter.for_line(l), lexicon, spec.scansion);
    }
    const bool rhyme_ok = gen::validate_rhyme(ends, spec.rhyme_scheme, lexicon);
    for (auto& item : batch.report["poemlets"]) {
      if (item["index"] == static_cast<int>(i)) item["valid"] = {{"meter", meter_ok}, {"rhyme", rhyme_ok}};
    }
    invalid += !(meter_ok && rhyme_ok);
    std::ostringstream name;
    name << "poemlet_" << std::setw(3) << std::setfill('0') << i + 1 << ".txt";
    write_file(fs::path(a.out) / name.str(), p.text());
    ++written;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  batch.report["elapsed_seconds"] = secs;
  batch.report["invalid"] = invalid;
  write_file(fs::path(a.out) / "report.json", batch.report.dump(2) + "\n");
  out << "wrote " << written << " poemlets to " << a.out << " (" << batch.failures.size() << " failed, " << invalid
      << " invalid, " << std::fixed << std::setprecision(1) << secs << " s)\n";
  for (const auto& f : batch.failures) err << "poemlet " << f.index + 1 << ": [" << f.code << "] " << f.message << '\n';
  return written > 0 && invalid == 0 ? 0 : 1;
}

int do_survey(const SurveyArgs& a, std::ostream& out) {
  const auto records = eval::load_survey(a.in);
  const json report = eval::survey_report(records);
  if (a.json) {
    out << report.dump(2) << '\n';
    return 0;
  }
  const auto f = eval::failure_ratios(records);
  const auto c = eval::chi_square_test(eval::contingency(records));
  const auto r = eval::rating_summary(records);
  out << std::fixed << std::setprecision(3);
  out << "judgments: " << records.size() << '\n';
  out << "failure ratio: human " << f.human << " (" << f.human_failed << '/' << f.human_total << "), machine "
      << f.machine << " (" << f.machine_failed << '/' << f.machine_total << ")\n";
  out << "chi-square (per judgment, no continuity correction): statistic " << c.statistic << ", dof " << c.dof
      << ", p " << std::setprecision(4) << c.p_value << '\n';
  out << std::setprecision(2);
  out << "ratings           human mean (sd)   machine mean (sd)\n";
  auto row = [&](const char* name, const eval::MeasureSummary& h, const eval::MeasureSummary& m) {
    out << std::left << std::setw(18) << name << std::right << h.mean << " (" << h.sd << ")       " << m.mean << " ("
        << m.sd << ")\n";
  };
  row("readability", r.human.readability, r.machine.readability);
  row("evocativeness", r.human.evocativeness, r.machine.evocativeness);
  row("aesthetics", r.human.aesthetics, r.machine.aesthetics);
  return 0;
}

int do_bleu(const BleuArgs& a, std::ostream& out) {
  const std::string candidate = read_file(a.candidate);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.refs)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("invalid_argument", "no reference files in " + a.refs);
  std::vector<std::string> refs;
  for (const auto& f : files) refs.push_back(read_file(f));
  const auto r = eval::bleu(candidate, refs, a.max_n);
  out << std::fixed << std::setprecision(4) << "BLEU " << r.score << " (n=" << r.max_n << ", BP " << r.brevity_penalty
      << ", candidate " << r.candidate_length << " tokens, reference " << r.reference_length << ")\n";
  for (int n = 0; n < r.max_n; ++n) {
    out << "  p" << n + 1 << " = " << r.matches[n] << '/' << r.totals[n] << (r.matches[n] == 0 ? " (smoothed)" : "")
        << '\n';
  }
  return 0;
}

service::Server* g_server = nullptr;

int do_serve(const ServeArgs& a, std::ostream& out) {
  service::Server server(a.models);
  const int port = server.bind(a.host, a.port);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  out << "listening on http://" << a.host << ':' << port << '\n' << std::flush;
  server.run();
  g_server = nullptr;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Author-style poetry generator"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Read a directory of .txt poems into a corpus file");
  c_ingest->add_option("--corpus", ingest.corpus, "Directory of .txt files")->required()->check(CLI::ExistingDirectory);
  c_ingest->add_option("--out", ingest.out, "Output corpus.json")->required();
  c_ingest->add_option("--id", ingest.id, "Corpus id (default: directory name)");
  auto* merge = c_ingest->add_option("--merge", ingest.merge, "Second corpus.json to mix in")->check(CLI::ExistingFile);
  c_ingest->add_option("--ratio", ingest.ratio, "Share of documents drawn from --corpus")->needs(merge)->check(CLI::Range(0.0, 1.0));
  c_ingest->add_option("--seed", ingest.seed, "Sampling seed for --merge");

  StyleArgs st;
  auto* c_style = app.add_subcommand("style", "Style model commands");
  c_style->require_subcommand(1);
  auto* c_build = c_style->add_subcommand("build", "Build a style model from an author and a background corpus");
  c_build->add_option("--corpus", st.corpus, "Author corpus.json")->required()->check(CLI::ExistingFile);
  c_build->add_option("--background", st.background, "Background corpus.json")->required()->check(CLI::ExistingFile);
  c_build->add_option("--out", st.out, "Output style.json")->required();
  c_build->add_option("--top-percent", st.config.n_percent, "Share n% of TF-IDF terms kept")->capture_default_str();
  c_build->add_option("--topics", st.config.topics, "LDA topic count K")->capture_default_str();
  c_build->add_option("--select-topics", st.config.select_topics, "Most relevant topics kept (m)")->capture_default_str();
  c_build->add_option("--words-per-topic", st.config.words_per_topic, "Top words per kept topic")->capture_default_str();
  c_build->add_option("--iterations", st.config.iterations, "Gibbs sweeps")->capture_default_str();
  c_build->add_option("--alpha", st.config.alpha, "Dirichlet alpha (0 = 50/K)")->capture_default_str();
  c_build->add_option("--beta", st.config.beta, "Dirichlet beta")->capture_default_str();
  c_build->add_option("--embed-dim", st.config.embed_dim, "Embedding dimension")->capture_default_str();
  c_build->add_option("--window", st.config.window, "Co-occurrence window")->capture_default_str();
  c_build->add_option("--neighbors", st.config.neighbor_k, "Neighbours per seed term")->capture_default_str();
  c_build->add_option("--decay", st.config.neighbor_decay, "Weight decay for neighbours")->capture_default_str();
  c_build->add_flag("--bigrams", st.config.bigrams, "Score word bigrams too");
  c_build->add_option("--seed", st.config.seed, "Seed")->capture_default_str();

  auto* c_lm = app.add_subcommand("lm", "Character language model commands");
  c_lm->require_subcommand(1);
  TrainArgs tr;
  auto* c_train = c_lm->add_subcommand("train", "Train the character LSTM");
  c_train->add_option("--corpus", tr.corpus, "corpus.json")->required()->check(CLI::ExistingFile);
  c_train->add_option("--out", tr.out, "Output lm.bin")->required();
  c_train->add_option("--hidden", tr.options.hidden, "Hidden units per layer")->capture_default_str();
  c_train->add_option("--layers", tr.options.layers, "LSTM layers")->capture_default_str();
  c_train->add_option("--embed", tr.options.embed, "Character embedding size")->capture_default_str();
  c_train->add_option("--steps", tr.options.steps, "Optimizer steps")->capture_default_str();
  c_train->add_option("--bptt", tr.options.bptt, "Window length")->capture_default_str();
  c_train->add_option("--batch", tr.options.batch, "Windows per step")->capture_default_str();
  c_train->add_option("--lr", tr.options.learning_rate, "Adam learning rate")->capture_default_str();
  c_train->add_option("--clip", tr.options.clip, "Global gradient norm clip")->capture_default_str();
  c_train->add_option("--seed", tr.options.seed, "Seed")->capture_default_str();
  c_train->add_option("--log-every", tr.log_every, "Print loss every N steps (0 = quiet)")->capture_default_str();
  CheckArgs ck;
  auto* c_check = c_lm->add_subcommand("check", "Validate a saved model");
  c_check->add_option("--model", ck.model, "lm.bin")->required()->check(CLI::ExistingFile);
  c_check->add_option("--text", ck.text, "Text file to measure perplexity on")->check(CLI::ExistingFile);
  c_check->add_flag("--gradcheck", ck.gradcheck, "Finite-difference check on a tiny model");

  GenerateArgs g;
  auto* c_gen = app.add_subcommand("generate", "Generate metered, rhymed poemlets");
  c_gen->add_option("--style", g.style, "style.json")->required()->check(CLI::ExistingFile);
  c_gen->add_option("--lm", g.lm, "lm.bin")->required()->check(CLI::ExistingFile);
  c_gen->add_option("--lexicon", g.lexicon, "Pronunciation dictionary")->required()->check(CLI::ExistingFile);
  c_gen->add_option("--out", g.out, "Output directory")->required();
  c_gen->add_option("--meter", g.meter, "Named meter or U/S/* template")->capture_default_str();
  c_gen->add_option("--rhyme", g.rhyme, "Rhyme scheme, e.g. ABAB");
  c_gen->add_option("--lines", g.lines, "Lines per poemlet (must match the rhyme scheme)");
  c_gen->add_option("--boost-terms", g.boost_terms, "Boost for high-entropy terms")->capture_default_str();
  c_gen->add_option("--boost-topics", g.boost_topics, "Boost for topic words")->capture_default_str();
  c_gen->add_option("--temp", g.temp, "Temperature")->capture_default_str();
  c_gen->add_option("--beam", g.beam, "Beam width (0 = exhaustive)")->capture_default_str();
  c_gen->add_option("--count", g.count, "Poemlets")->capture_default_str();
  c_gen->add_option("--samples", g.samples, "Candidates kept per line")->capture_default_str();
  c_gen->add_option("--budget", g.budget, "Beam steps per line")->capture_default_str();
  c_gen->add_option("--noise", g.noise, "Gumbel noise on pruning (0 = deterministic)")->capture_default_str();
  c_gen->add_option("--vocab", g.vocab, "Restrict words to this list")->check(CLI::ExistingFile);
  c_gen->add_option("--seed", g.seed, "Seed")->capture_default_str();

  auto* c_eval = app.add_subcommand("eval", "Evaluation");
  c_eval->require_subcommand(1);
  SurveyArgs sv;
  auto* c_survey = c_eval->add_subcommand("survey", "Summarize an indistinguishability survey");
  c_survey->add_option("--in", sv.in, "results.csv")->required()->check(CLI::ExistingFile);
  c_survey->add_flag("--json", sv.json, "Print JSON");
  BleuArgs bl;
  auto* c_bleu = c_eval->add_subcommand("bleu", "BLEU of a candidate against reference files");
  c_bleu->add_option("--candidate", bl.candidate, "Candidate text file")->required()->check(CLI::ExistingFile);
  c_bleu->add_option("--refs", bl.refs, "Directory of reference files")->required()->check(CLI::ExistingDirectory);
  c_bleu->add_option("--max-n", bl.max_n, "Highest n-gram order")->capture_default_str();

  ServeArgs sr;
  auto* c_serve = app.add_subcommand("serve", "Run the HTTP API");
  c_serve->add_option("--models", sr.models, "Models directory")->required()->check(CLI::ExistingDirectory);
  c_serve->add_option("--port", sr.port, "Port (0 = any)")->capture_default_str();
  c_serve->add_option("--host", sr.host, "Bind address")->capture_default_str();

  std::vector<const char*> argv{args.empty() ? "verse" : args[0].c_str()};
  for (std::size_t i = 1; i < args.size(); ++i) argv.push_back(args[i].c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (c_ingest->parsed()) return do_ingest(ingest, out);
    if (c_build->parsed()) return do_style(st, out);
    if (c_train->parsed()) return do_train(tr, out);
    if (c_check->parsed()) return do_check(ck, out);
    if (c_gen->parsed()) return do_generate(g, out, err);
    if (c_survey->parsed()) return do_survey(sv, out);
    if (c_bleu->parsed()) return do_bleu(bl, out);
    if (c_serve->parsed()) return do_serve(sr, out);
  } catch (const gen::GenerationError& e) {
    err << "error [" << e.code() << "]: " << e.what() << '\n' << e.details().dump(2) << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error [" << e.code() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace verse::cli
