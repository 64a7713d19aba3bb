#pragma once

// Synthetic transcripts with a known latent-logistic ground truth.
//
// A student of ability a passes course c (difficulty d) in a term of n
// courses with probability sigmoid(a - d - lambda * max(0, n - 4)), after an
// independent withdrawal draw. The chance of passing a whole term is the
// product of those probabilities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nextterm/error.hpp"
#include "nextterm/lstm.hpp"
#include "nextterm/transcript.hpp"

namespace nextterm {

struct SynthConfig {
  std::size_t num_students = 800;
  std::size_t catalog_size = 40;
  std::size_t min_terms = 4;
  std::size_t max_terms = 10;
  std::size_t min_courses = 3;
  std::size_t max_courses = 6;
  double ability_mean = 1.0;
  double ability_sd = 1.0;
  double difficulty_mean = 0.0;
  double difficulty_sd = 1.0;
  double load_penalty = 0.15;    // lambda
  std::size_t load_threshold = 4;
  double withdraw_prob = 0.05;
  // Grade within the pass (10..20) or fail (0..9) band is binomial in
  // sigmoid(a - d) when true, uniform when false.
  bool ability_linked_grades = true;
  std::optional<double> ability_override;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_students == 0 || catalog_size == 0) throw ValidationError("students and catalog size must be positive");
    if (min_terms == 0 || min_terms > max_terms) throw ValidationError("terms range is empty");
    if (min_courses == 0 || min_courses > max_courses) throw ValidationError("courses-per-term range is empty");
    if (min_courses > catalog_size) throw ValidationError("catalog smaller than the minimum term load");
    if (!(withdraw_prob >= 0 && withdraw_prob <= 1)) throw ValidationError("withdraw probability outside [0, 1]");
    if (!(ability_sd >= 0 && difficulty_sd >= 0 && load_penalty >= 0)) {
      throw ValidationError("standard deviations and load penalty must be non-negative");
    }
  }
};

struct GroundTruth {
  std::map<std::string, double> abilities;
  std::map<std::string, double> difficulties;
  double load_penalty = 0.15;
  std::size_t load_threshold = 4;
  double withdraw_prob = 0.05;

  // Probability of a passing grade given no withdrawal.
  double pass_probability(double ability, double difficulty, std::size_t load) const {
    const double excess = load > load_threshold ? static_cast<double>(load - load_threshold) : 0.0;
    return sigmoid(ability - difficulty - load_penalty * excess);
  }
};

struct SynthCorpus {
  std::vector<RawRecord> records;
  GroundTruth truth;
};

inline std::string synth_course_id(std::size_t k, std::size_t catalog_size) {
  const auto width = std::to_string(catalog_size > 0 ? catalog_size - 1 : 0).size();
  std::ostringstream s;
  s << 'C' << std::setw(static_cast<int>(width)) << std::setfill('0') << k;
  return s.str();
}

inline std::string synth_student_id(std::size_t k) {
  std::ostringstream s;
  s << 's' << std::setw(4) << std::setfill('0') << k;
  return s.str();
}

// Terms run 2010-1, 2010-2, 2011-1, ... from a per-student start year.
inline std::string synth_period(int start_year, std::size_t term) {
  return std::to_string(start_year + static_cast<int>(term / 2)) + "-" + std::to_string(term % 2 + 1);
}

inline SynthCorpus generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  SynthCorpus out;
  auto& truth = out.truth;
  truth.load_penalty = cfg.load_penalty;
  truth.load_threshold = cfg.load_threshold;
  truth.withdraw_prob = cfg.withdraw_prob;

  std::vector<std::string> courses(cfg.catalog_size);
  std::vector<double> difficulty(cfg.catalog_size);
  std::normal_distribution<double> diff_dist(cfg.difficulty_mean, cfg.difficulty_sd);
  for (std::size_t c = 0; c < cfg.catalog_size; ++c) {
    courses[c] = synth_course_id(c, cfg.catalog_size);
    difficulty[c] = diff_dist(rng);
    truth.difficulties[courses[c]] = difficulty[c];
  }

  std::normal_distribution<double> ability_dist(cfg.ability_mean, cfg.ability_sd);
  std::uniform_int_distribution<std::size_t> terms_dist(cfg.min_terms, cfg.max_terms);
  std::uniform_int_distribution<std::size_t> load_dist(cfg.min_courses, std::min(cfg.max_courses, cfg.catalog_size));
  std::uniform_int_distribution<int> start_dist(2010, 2014);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> all_courses(cfg.catalog_size);
  for (std::size_t c = 0; c < cfg.catalog_size; ++c) all_courses[c] = c;

  for (std::size_t s = 0; s < cfg.num_students; ++s) {
    const auto student = synth_student_id(s);
    const double draw = ability_dist(rng);
    const double ability = cfg.ability_override.value_or(draw);
    truth.abilities[student] = ability;
    const auto n_terms = terms_dist(rng);
    const int start = start_dist(rng);

    for (std::size_t t = 0; t < n_terms; ++t) {
      const auto period = synth_period(start, t);
      const auto load = load_dist(rng);
      std::vector<std::size_t> picked;
      std::sample(all_courses.begin(), all_courses.end(), std::back_inserter(picked), load, rng);
      for (auto c : picked) {
        RawRecord rec{student, courses[c], period, Grade::withdrawn()};
        if (unit(rng) >= cfg.withdraw_prob) {
          const bool pass = unit(rng) < truth.pass_probability(ability, difficulty[c], load);
          int grade = 0;
          if (cfg.ability_linked_grades) {
            const double q = sigmoid(ability - difficulty[c]);
            grade = pass ? 10 + std::binomial_distribution<int>(10, q)(rng) : std::binomial_distribution<int>(9, q)(rng);
          } else {
            grade = pass ? std::uniform_int_distribution<int>(10, 20)(rng) : std::uniform_int_distribution<int>(0, 9)(rng);
          }
          rec.grade = Grade::numeric(grade);
        }
        out.records.push_back(std::move(rec));
      }
    }
  }
  return out;
}

// Oracle probability that `student` passes every course of `combo`.
inline double true_success_probability(const GroundTruth& truth, const std::string& student,
                                       std::span<const std::string> combo) {
  if (combo.empty()) throw ValidationError("course combination must be non-empty");
  auto a = truth.abilities.find(student);
  if (a == truth.abilities.end()) throw ValidationError("unknown student: " + student);
  double p = 1.0;
  for (const auto& course : combo) {
    auto d = truth.difficulties.find(course);
    if (d == truth.difficulties.end()) throw UnknownCourseError(course);
    p *= (1.0 - truth.withdraw_prob) * truth.pass_probability(a->second, d->second, combo.size());
  }
  return p;
}

inline nlohmann::json truth_to_json(const GroundTruth& t) {
  return {{"abilities", t.abilities},
          {"difficulties", t.difficulties},
          {"lambda", t.load_penalty},
          {"load_threshold", t.load_threshold},
          {"withdraw_prob", t.withdraw_prob}};
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
  try {
    GroundTruth t;
    t.abilities = j.at("abilities").get<std::map<std::string, double>>();
    t.difficulties = j.at("difficulties").get<std::map<std::string, double>>();
    t.load_penalty = j.at("lambda").get<double>();
    t.load_threshold = j.value("load_threshold", std::size_t{4});
    t.withdraw_prob = j.at("withdraw_prob").get<double>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed ground-truth document: ") + e.what());
  }
}

}  // namespace nextterm
