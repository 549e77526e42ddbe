#include "verse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/tokenizer.hpp>

#include "verse/corpus.hpp"
#include "verse/error.hpp"

namespace verse::eval {

Source parse_source(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "human") return Source::human;
  if (t == "machine") return Source::machine;
  throw Error("invalid_survey", "source must be 'human' or 'machine', got '" + std::string(text) + "'");
}

std::string_view source_name(Source s) { return s == Source::human ? "human" : "machine"; }

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  boost::tokenizer<boost::escaped_list_separator<char>> tok(line);
  std::vector<std::string> out;
  for (const auto& f : tok) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : f.substr(b, e - b + 1));
  }
  return out;
}

int parse_rating(const std::string& field, long row) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != field.size() || field.empty() || v < 1 || v > 5) {
    throw Error("invalid_survey", "row " + std::to_string(row) + ": rating must be an integer 1..5, got '" + field + "'");
  }
  return v;
}

}  // namespace

std::vector<SurveyRecord> parse_survey(std::istream& in) {
  static const std::vector<std::string> header = {"participant", "poem",          "true_source", "guess",
                                                  "readability", "evocativeness", "aesthetics"};
  std::string line;
  long row = 0;
  bool seen_header = false;
  std::vector<SurveyRecord> out;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> f;
    try {
      f = split_csv(line);
    } catch (const boost::escaped_list_error& e) {
      throw Error("invalid_survey", "row " + std::to_string(row) + ": " + e.what());
    }
    if (!seen_header) {
      if (!f.empty() && f[0].rfind("\xEF\xBB\xBF", 0) == 0) f[0].erase(0, 3);
      if (f != header) throw Error("invalid_survey", "unexpected header; want " + std::string("participant,poem,true_source,guess,readability,evocativeness,aesthetics"));
      seen_header = true;
      continue;
    }
    if (f.size() != header.size()) {
      throw Error("invalid_survey", "row " + std::to_string(row) + ": expected 7 fields, got " + std::to_string(f.size()));
    }
    SurveyRecord r;
    r.participant = f[0];
    r.poem = f[1];
    try {
      r.true_source = parse_source(f[2]);
      r.guess = parse_source(f[3]);
    } catch (const Error& e) {
      throw Error("invalid_survey", "row " + std::to_string(row) + ": " + e.what());
    }
    r.readability = parse_rating(f[4], row);
    r.evocativeness = parse_rating(f[5], row);
    r.aesthetics = parse_rating(f[6], row);
    out.push_back(std::move(r));
  }
  if (!seen_header) throw Error("invalid_survey", "empty survey file");
  return out;
}

std::vector<SurveyRecord> load_survey(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  return parse_survey(in);
}

FailureRatios failure_ratios(const std::vector<SurveyRecord>& records) {
  FailureRatios r;
  for (const auto& rec : records) {
    const bool failed = rec.guess != rec.true_source;
    if (rec.true_source == Source::human) {
      ++r.human_total;
      r.human_failed += failed;
    } else {
      ++r.machine_total;
      r.machine_failed += failed;
    }
  }
  if (r.human_total == 0 || r.machine_total == 0) {
    throw Error("missing_group", "failure ratios need judgments of both human and machine poems");
  }
  r.human = static_cast<double>(r.human_failed) / static_cast<double>(r.human_total);
  r.machine = static_cast<double>(r.machine_failed) / static_cast<double>(r.machine_total);
  return r;
}

ContingencyTable contingency(const std::vector<SurveyRecord>& records) {
  ContingencyTable t{};
  for (const auto& rec : records) {
    t[rec.true_source == Source::human ? 0 : 1][rec.guess == rec.true_source ? 0 : 1] += 1;
  }
  return t;
}

double chi_square_survival(double x, int dof) {
  if (dof < 1) throw Error("invalid_argument", "degrees of freedom must be >= 1");
  if (!(x >= 0.0)) throw Error("invalid_argument", "chi-square statistic must be >= 0");
  if (x == 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

ChiSquareResult chi_square_test(const ContingencyTable& t) {
  double rows[2] = {0, 0}, cols[2] = {0, 0}, n = 0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (t[i][j] < 0) throw Error("invalid_table", "contingency counts must be non-negative");
      rows[i] += static_cast<double>(t[i][j]);
      cols[j] += static_cast<double>(t[i][j]);
      n += static_cast<double>(t[i][j]);
    }
  }
  if (rows[0] == 0 || rows[1] == 0 || cols[0] == 0 || cols[1] == 0) {
    throw Error("zero_marginal", "every row and column of the table needs a positive total");
  }
  ChiSquareResult r;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double e = rows[i] * cols[j] / n;
      const double d = static_cast<double>(t[i][j]) - e;
      r.statistic += d * d / e;
    }
  }
  r.p_value = chi_square_survival(r.statistic, r.dof);
  return r;
}

namespace {

MeasureSummary summarize(const std::vector<int>& v) {
  MeasureSummary s;
  s.n = static_cast<long>(v.size());
  if (v.empty()) return s;
  double sum = 0;
  for (int x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (int x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

SourceRatings ratings_for(const std::vector<SurveyRecord>& records, Source src) {
  std::vector<int> r, e, a;
  for (const auto& rec : records) {
    if (rec.true_source != src) continue;
    r.push_back(rec.readability);
    e.push_back(rec.evocativeness);
    a.push_back(rec.aesthetics);
  }
  return {summarize(r), summarize(e), summarize(a)};
}

nlohmann::json measure_json(const MeasureSummary& m) { return {{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}}; }

nlohmann::json source_json(const SourceRatings& s) {
  return {{"readability", measure_json(s.readability)},
          {"evocativeness", measure_json(s.evocativeness)},
          {"aesthetics", measure_json(s.aesthetics)}};
}

}  // namespace

RatingSummary rating_summary(const std::vector<SurveyRecord>& records) {
  return {ratings_for(records, Source::human), ratings_for(records, Source::machine)};
}

nlohmann::json survey_report(const std::vector<SurveyRecord>& records) {
  const FailureRatios f = failure_ratios(records);
  const ContingencyTable t = contingency(records);
  const ChiSquareResult c = chi_square_test(t);
  const RatingSummary r = rating_summary(records);
  return {{"records", records.size()},
          {"failure_ratio", {{"human", f.human}, {"machine", f.machine}}},
          {"contingency", {{"human", {t[0][0], t[0][1]}}, {"machine", {t[1][0], t[1][1]}}}},
          {"chi_square", {{"statistic", c.statistic}, {"dof", c.dof}, {"p_value", c.p_value},
                          {"unit", "per judgment"}, {"continuity_correction", false}}},
          {"ratings", {{"human", source_json(r.human)}, {"machine", source_json(r.machine)}}}};
}

BleuResult bleu(std::string_view candidate, const std::vector<std::string>& references, int max_n) {
  if (max_n < 1) throw Error("invalid_argument", "max_n must be >= 1");
  if (references.empty()) throw Error("invalid_argument", "at least one reference is required");
  const auto cand = corpus::tokenize_words(candidate);
  if (cand.empty()) throw Error("empty_candidate", "candidate has no tokens");
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) refs.push_back(corpus::tokenize_words(r));

  using Counts = std::map<std::vector<std::string>, long>;
  auto ngrams = [](const std::vector<std::string>& toks, int n) {
    Counts c;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
      ++c[std::vector<std::string>(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i) + n)];
    }
    return c;
  };

  BleuResult r;
  r.candidate_length = static_cast<long>(cand.size());
  r.max_n = std::min<int>(max_n, static_cast<int>(cand.size()));
  double log_sum = 0.0;
  for (int n = 1; n <= r.max_n; ++n) {
    const Counts c = ngrams(cand, n);
    Counts max_ref;
    for (const auto& ref : refs) {
      for (const auto& [g, k] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], k);
    }
    long matched = 0, total = 0;
    for (const auto& [g, k] : c) {
      total += k;
      const auto it = max_ref.find(g);
      if (it != max_ref.end()) matched += std::min(k, it->second);
    }
    r.matches.push_back(matched);
    r.totals.push_back(total);
    const double p = matched > 0 ? static_cast<double>(matched) / static_cast<double>(total)
                                 : 1.0 / (2.0 * static_cast<double>(total));
    r.precisions.push_back(p);
    log_sum += std::log(p);
  }

  long best = -1;
  for (const auto& ref : refs) {
    const long len = static_cast<long>(ref.size());
    const long d = std::labs(len - r.candidate_length), bd = std::labs(best - r.candidate_length);
    if (best < 0 || d < bd || (d == bd && len < best)) best = len;
  }
  r.reference_length = best;
  r.brevity_penalty = r.candidate_length >= best
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(best) / static_cast<double>(r.candidate_length));
  r.score = r.brevity_penalty * std::exp(log_sum / r.max_n);
  return r;
}

}  // namespace verse::eval
