#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace verse::eval {

enum class Source { human, machine };

Source parse_source(std::string_view text);
std::string_view source_name(Source s);

struct SurveyRecord {
  std::string participant;
  std::string poem;
  Source true_source = Source::human;
  Source guess = Source::human;
  int readability = 0;  // 1..5
  int evocativeness = 0;
  int aesthetics = 0;
};

/// Header `participant,poem,true_source,guess,readability,evocativeness,aesthetics`;
/// fields may be double-quoted. Throws Error("invalid_survey") with the row number.
std::vector<SurveyRecord> parse_survey(std::istream& in);
std::vector<SurveyRecord> load_survey(const std::filesystem::path& path);

struct FailureRatios {
  double human = 0.0;
  double machine = 0.0;
  long human_total = 0, human_failed = 0;
  long machine_total = 0, machine_failed = 0;
};

/// Fraction of judgments per true source whose guess was wrong.
FailureRatios failure_ratios(const std::vector<SurveyRecord>& records);

/// Rows: true source (human, machine). Columns: identification (correct, failed).
using ContingencyTable = std::array<std::array<long, 2>, 2>;

ContingencyTable contingency(const std::vector<SurveyRecord>& records);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 1;
  double p_value = 1.0;
};

/// Upper tail of the chi-square distribution, via the regularized upper
/// incomplete gamma function Q(dof/2, x/2).
double chi_square_survival(double x, int dof);

/// Pearson statistic without continuity correction.
ChiSquareResult chi_square_test(const ContingencyTable& table);

struct MeasureSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
  long n = 0;
};

struct SourceRatings {
  MeasureSummary readability, evocativeness, aesthetics;
};

struct RatingSummary {
  SourceRatings human, machine;
};

RatingSummary rating_summary(const std::vector<SurveyRecord>& records);

nlohmann::json survey_report(const std::vector<SurveyRecord>& records);

struct BleuResult {
  double score = 0.0;
  int max_n = 0;                  // min(requested, candidate length)
  std::vector<long> matches;      // clipped counts per order
  std::vector<long> totals;       // candidate n-grams per order
  std::vector<double> precisions; // after smoothing
  double brevity_penalty = 1.0;
  long candidate_length = 0;
  long reference_length = 0;      // closest, ties to the shorter
};

/// Corpus-free sentence BLEU over normalized word tokens. A zero precision
/// is replaced by 1 / (2 * candidate n-gram count).
BleuResult bleu(std::string_view candidate, const std::vector<std::string>& references, int max_n = 4);

}  // namespace verse::eval
