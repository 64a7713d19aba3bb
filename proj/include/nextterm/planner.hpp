#pragma once

// What-if scoring of candidate next-term course combinations.
//
// Request:  {"history":[{"period":"2018-1","grades":[{"course":"X","grade":15}]}],
//            "candidates":[["A","B"],["A","C"]]}
// Response: {"checkpoint":"<id>","probabilities":[...],"ranking":[...]}

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nextterm/checkpoint.hpp"
#include "nextterm/encoder.hpp"
#include "nextterm/error.hpp"
#include "nextterm/model.hpp"
#include "nextterm/transcript.hpp"

namespace nextterm {

inline constexpr std::size_t kMaxCandidates = 20;
inline constexpr std::size_t kMaxCoursesPerCandidate = 12;

// Structurally invalid request (maps to HTTP 400).
class BadRequest : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct HistoryTerm {
  std::string period;
  std::vector<std::pair<std::string, Grade>> grades;
};

struct PlanQuery {
  std::vector<HistoryTerm> history;
  std::vector<std::vector<std::string>> candidates;
};

struct PlanResponse {
  std::vector<double> probabilities;
  std::vector<std::size_t> ranking;  // candidate indices, best first
  std::string checkpoint;
};

namespace detail {

inline Grade grade_from_json(const nlohmann::json& g) {
  try {
    if (g.is_string()) return Grade::parse(g.get<std::string>());
    if (g.is_number_integer()) return Grade::numeric(g.get<int>());
  } catch (const ValidationError& e) {
    throw BadRequest(e.what());
  }
  throw BadRequest("grade must be an integer 0..20 or \"R\"");
}

}  // namespace detail

inline std::vector<HistoryTerm> parse_history(const nlohmann::json& arr) {
  if (!arr.is_array() || arr.empty()) throw BadRequest("history must be a non-empty array");
  std::vector<HistoryTerm> out;
  std::set<std::string> periods;
  for (const auto& t : arr) {
    if (!t.is_object() || !t.contains("period") || !t["period"].is_string() || !t.contains("grades") ||
        !t["grades"].is_array() || t["grades"].empty()) {
      throw BadRequest("each history entry needs a string \"period\" and a non-empty \"grades\" array");
    }
    HistoryTerm term;
    term.period = t["period"].get<std::string>();
    if (term.period.empty()) throw BadRequest("period must be non-empty");
    if (!periods.insert(term.period).second) throw BadRequest("duplicate period " + term.period);
    std::set<std::string> courses;
    for (const auto& g : t["grades"]) {
      if (!g.is_object() || !g.contains("course") || !g["course"].is_string() || !g.contains("grade")) {
        throw BadRequest("each grade entry needs \"course\" and \"grade\"");
      }
      auto course = g["course"].get<std::string>();
      if (!courses.insert(course).second) throw BadRequest("course " + course + " repeated in period " + term.period);
      term.grades.emplace_back(std::move(course), detail::grade_from_json(g["grade"]));
    }
    out.push_back(std::move(term));
  }
  return out;
}

inline std::vector<std::vector<std::string>> parse_candidates(const nlohmann::json& arr) {
  if (!arr.is_array() || arr.empty() || arr.size() > kMaxCandidates) {
    throw BadRequest("candidates must be an array of 1.." + std::to_string(kMaxCandidates) + " course lists");
  }
  std::vector<std::vector<std::string>> out;
  for (const auto& c : arr) {
    if (!c.is_array() || c.empty() || c.size() > kMaxCoursesPerCandidate) {
      throw BadRequest("each candidate must list 1.." + std::to_string(kMaxCoursesPerCandidate) + " courses");
    }
    std::vector<std::string> combo;
    std::set<std::string> seen;
    for (const auto& course : c) {
      if (!course.is_string()) throw BadRequest("course ids must be strings");
      auto id = course.get<std::string>();
      if (!seen.insert(id).second) throw BadRequest("course " + id + " repeated within a candidate");
      combo.push_back(std::move(id));
    }
    out.push_back(std::move(combo));
  }
  return out;
}

inline PlanQuery parse_plan_query(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("history") || !body.contains("candidates")) {
    throw BadRequest("request must be an object with \"history\" and \"candidates\"");
  }
  return {parse_history(body["history"]), parse_candidates(body["candidates"])};
}

inline nlohmann::json plan_response_to_json(const PlanResponse& r) {
  return {{"checkpoint", r.checkpoint}, {"probabilities", r.probabilities}, {"ranking", r.ranking}};
}

// Chronological term encodings of a raw-grade history.
inline std::vector<TermStep> encode_history(const std::vector<HistoryTerm>& history, const CourseCatalog& catalog) {
  if (history.empty()) throw ValidationError("history is empty");
  std::map<std::string, const HistoryTerm*> ordered;
  for (const auto& t : history) {
    if (!ordered.emplace(t.period, &t).second) throw BadRequest("duplicate period " + t.period);
  }
  std::vector<TermStep> steps;
  for (const auto& [period, term] : ordered) {
    std::vector<CourseGrade> cg;
    for (const auto& [course, grade] : term->grades) cg.emplace_back(catalog.index_of(course), bucket_grade(grade));
    steps.push_back(encode_term(cg, catalog.size()));
  }
  return steps;
}

inline PlanResponse score_plans(const ModelParams& model, const CourseCatalog& catalog, const PlanQuery& query,
                                std::string checkpoint = {}) {
  if (query.candidates.empty()) throw BadRequest("no candidates");
  const auto history = encode_history(query.history, catalog);
  std::vector<QueryCombo> combos;
  combos.reserve(query.candidates.size());
  for (const auto& c : query.candidates) combos.push_back(make_query(c, catalog));

  PlanResponse r;
  r.checkpoint = std::move(checkpoint);
  for (const auto& q : combos) r.probabilities.push_back(predict(model, history, q));
  r.ranking.resize(r.probabilities.size());
  std::iota(r.ranking.begin(), r.ranking.end(), std::size_t{0});
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return r.probabilities[a] > r.probabilities[b]; });
  return r;
}

}  // namespace nextterm
