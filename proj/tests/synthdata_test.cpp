#include "nextterm/synthdata.hpp"

#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "nextterm/encoder.hpp"

namespace nextterm {
namespace {

TEST(Generate, SameSeedSameCorpus) {
  SynthConfig cfg;
  cfg.num_students = 50;
  cfg.seed = 3;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.truth.abilities, b.truth.abilities);
  EXPECT_EQ(serialize_transcript(a.records), serialize_transcript(b.records));
  cfg.seed = 4;
  EXPECT_NE(generate(cfg).records, a.records);
}

TEST(Generate, DefaultCorpusShape) {
  SynthConfig cfg;
  cfg.seed = 0;
  const auto corpus = generate(cfg);
  std::set<std::pair<std::string, std::string>> student_terms;
  std::set<std::string> students;
  for (const auto& r : corpus.records) {
    student_terms.emplace(r.student_id, r.period);
    students.insert(r.student_id);
  }
  EXPECT_EQ(students.size(), 800u);
  EXPECT_GE(student_terms.size(), 3000u);
  EXPECT_LE(student_terms.size(), 8000u);
  EXPECT_NO_THROW(parse_transcript(serialize_transcript(corpus.records)));
}

TEST(Generate, HighAbilityAlmostNeverFails) {
  SynthConfig cfg;
  cfg.ability_override = 10.0;
  cfg.seed = 0;
  const auto corpus = generate(cfg);
  std::size_t graded = 0, failed = 0;
  for (const auto& r : corpus.records) {
    if (r.grade.is_withdrawal()) continue;
    ++graded;
    failed += r.grade.value() < kPassMark;
  }
  EXPECT_LT(static_cast<double>(failed) / static_cast<double>(graded), 0.01);
}

TEST(Generate, PeriodsStrictlyOrderedPerStudent) {
  SynthConfig cfg;
  cfg.num_students = 100;
  cfg.seed = 8;
  const auto corpus = generate(cfg);
  std::map<std::string, std::vector<std::string>> seen;
  for (const auto& r : corpus.records) {
    auto& v = seen[r.student_id];
    if (v.empty() || v.back() != r.period) v.push_back(r.period);
  }
  for (const auto& [s, periods] : seen) {
    EXPECT_TRUE(std::is_sorted(periods.begin(), periods.end())) << s;
    EXPECT_EQ(std::set<std::string>(periods.begin(), periods.end()).size(), periods.size()) << s;
    EXPECT_GE(periods.size(), cfg.min_terms);
    EXPECT_LE(periods.size(), cfg.max_terms);
  }
}

TEST(Generate, UniformGradeVariantStaysInBands) {
  SynthConfig cfg;
  cfg.num_students = 50;
  cfg.ability_linked_grades = false;
  cfg.seed = 2;
  for (const auto& r : generate(cfg).records) {
    if (!r.grade.is_withdrawal()) {
      EXPECT_GE(r.grade.value(), 0);
      EXPECT_LE(r.grade.value(), 20);
    }
  }
}

TEST(Generate, RejectsInvalidConfig) {
  SynthConfig cfg;
  cfg.min_terms = 5;
  cfg.max_terms = 4;
  EXPECT_THROW(generate(cfg), ValidationError);
  cfg = {};
  cfg.withdraw_prob = 1.5;
  EXPECT_THROW(generate(cfg), ValidationError);
}

GroundTruth simple_truth() {
  GroundTruth t;
  t.abilities = {{"s", 0.0}, {"strong", 2.0}};
  t.difficulties = {{"A", 0.0}, {"B", 0.0}, {"C", 1.5}, {"D", -0.5}, {"E", 0.2}, {"F", 0.0}};
  t.load_penalty = 0.15;
  t.withdraw_prob = 0.0;
  return t;
}

TEST(TrueSuccessProbability, ClosedForms) {
  const auto t = simple_truth();
  EXPECT_EQ(true_success_probability(t, "s", std::vector<std::string>{"A"}), 0.5);
  EXPECT_EQ(true_success_probability(t, "s", std::vector<std::string>{"A", "B"}), 0.25);
  EXPECT_THROW(true_success_probability(t, "s", std::vector<std::string>{}), ValidationError);
  EXPECT_THROW(true_success_probability(t, "s", std::vector<std::string>{"NOPE"}), UnknownCourseError);
  EXPECT_THROW(true_success_probability(t, "ghost", std::vector<std::string>{"A"}), ValidationError);
}

TEST(TrueSuccessProbability, AddingACourseNeverHelps) {
  SynthConfig cfg;
  cfg.num_students = 30;
  cfg.catalog_size = 12;
  cfg.seed = 6;
  const auto corpus = generate(cfg);
  std::vector<std::string> courses;
  for (const auto& [c, d] : corpus.truth.difficulties) courses.push_back(c);
  std::mt19937_64 rng(1);
  for (const auto& [student, a] : corpus.truth.abilities) {
    auto pool = courses;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::string> combo;
    double prev = 1.0;
    for (const auto& c : pool) {
      combo.push_back(c);
      const double p = true_success_probability(corpus.truth, student, combo);
      EXPECT_LE(p, prev);
      prev = p;
    }
  }
}

TEST(TrueSuccessProbability, HigherAbilityNeverHurts) {
  auto t = simple_truth();
  const std::vector<std::string> combo{"A", "C", "D", "E", "F"};
  double prev = 0;
  for (double a = -4; a <= 4; a += 0.25) {
    t.abilities["x"] = a;
    const double p = true_success_probability(t, "x", combo);
    EXPECT_GE(p, prev);
    prev = p;
  }
}

// Observed passes match the oracle within 3 standard errors.
TEST(Generate, EmpiricalPassRatesMatchOracle) {
  SynthConfig cfg;
  cfg.seed = 12;
  const auto corpus = generate(cfg);
  std::map<std::pair<std::string, std::string>, std::size_t> load;
  for (const auto& r : corpus.records) ++load[{r.student_id, r.period}];

  constexpr std::size_t kSample = 10000;
  ASSERT_GE(corpus.records.size(), kSample);
  std::array<double, 3> observed{}, expected{}, variance{};
  for (std::size_t k = 0; k < kSample; ++k) {
    const auto& r = corpus.records[k];
    const double p = (1 - corpus.truth.withdraw_prob) *
                     corpus.truth.pass_probability(corpus.truth.abilities.at(r.student_id),
                                                   corpus.truth.difficulties.at(r.course_id), load[{r.student_id, r.period}]);
    const auto bin = std::min<std::size_t>(2, static_cast<std::size_t>(p * 3));
    observed[bin] += is_passing(bucket_grade(r.grade)) ? 1 : 0;
    expected[bin] += p;
    variance[bin] += p * (1 - p);
  }
  double obs_all = 0, exp_all = 0, var_all = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    obs_all += observed[b];
    exp_all += expected[b];
    var_all += variance[b];
    if (variance[b] > 0) EXPECT_LE(std::abs(observed[b] - expected[b]), 3 * std::sqrt(variance[b])) << "bin " << b;
  }
  EXPECT_LE(std::abs(obs_all - exp_all), 3 * std::sqrt(var_all));
}

TEST(GroundTruthJson, RoundTrip) {
  const auto t = simple_truth();
  const auto back = truth_from_json(nlohmann::json::parse(truth_to_json(t).dump()));
  EXPECT_EQ(back.abilities, t.abilities);
  EXPECT_EQ(back.difficulties, t.difficulties);
  EXPECT_EQ(back.load_penalty, t.load_penalty);
  EXPECT_EQ(back.withdraw_prob, t.withdraw_prob);
  EXPECT_THROW(truth_from_json(nlohmann::json::object()), ValidationError);
}

}  // namespace
}  // namespace nextterm
