#pragma once

// Per-term multi-label one-hot encoding, chronological per-student
// sequences, last-term labels and the train/validation split.
//
// Layout of a term vector: position course_index * 4 + category_index.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nextterm/error.hpp"
#include "nextterm/transcript.hpp"

namespace nextterm {

// Sparse storage of a {0,1} vector: sorted positions of the ones.
struct TermStep {
  std::size_t dim = 0;
  std::vector<std::size_t> active;

  std::vector<double> dense() const {
    std::vector<double> v(dim, 0.0);
    for (auto i : active) v[i] = 1.0;
    return v;
  }

  friend bool operator==(const TermStep&, const TermStep&) = default;
};

// Multi-hot course set for the term being predicted (courses only, no grades).
struct QueryCombo {
  std::size_t dim = 0;
  std::vector<std::size_t> active;

  std::vector<double> dense() const {
    std::vector<double> v(dim, 0.0);
    for (auto i : active) v[i] = 1.0;
    return v;
  }

  friend bool operator==(const QueryCombo&, const QueryCombo&) = default;
};

struct TrainExample {
  std::string student_id;
  std::vector<TermStep> history;       // chronological
  std::vector<std::string> periods;    // period key of each history step
  QueryCombo query;
  int label = 0;

  friend bool operator==(const TrainExample&, const TrainExample&) = default;
};

struct DatasetSplit {
  std::vector<TrainExample> train;
  std::vector<TrainExample> validation;
  std::uint64_t seed = 0;
};

struct BuildReport {
  std::vector<TrainExample> examples;
  std::vector<std::string> skipped_students;  // fewer than two distinct periods
};

using CourseGrade = std::pair<std::size_t, GradeCategory>;

inline TermStep encode_term(std::span<const CourseGrade> term, std::size_t catalog_size) {
  if (term.empty()) throw ValidationError("cannot encode an empty term");
  TermStep step;
  step.dim = catalog_size * kNumCategories;
  std::vector<bool> seen(catalog_size, false);
  for (const auto& [course, category] : term) {
    if (course >= catalog_size) {
      throw ValidationError("course index " + std::to_string(course) + " out of range for catalog of size " +
                            std::to_string(catalog_size));
    }
    if (seen[course]) throw ValidationError("course index " + std::to_string(course) + " repeated within a term");
    seen[course] = true;
    step.active.push_back(course * kNumCategories + category_index(category));
  }
  std::sort(step.active.begin(), step.active.end());
  return step;
}

// Inverse of encode_term, sorted by course index.
inline std::vector<CourseGrade> decode_term(const TermStep& step) {
  std::vector<CourseGrade> out;
  out.reserve(step.active.size());
  for (auto pos : step.active) {
    out.emplace_back(pos / kNumCategories, kAllCategories[pos % kNumCategories]);
  }
  return out;
}

inline QueryCombo make_query(std::span<const std::size_t> courses, std::size_t catalog_size) {
  if (courses.empty()) throw ValidationError("query combination must contain at least one course");
  QueryCombo q;
  q.dim = catalog_size;
  q.active.assign(courses.begin(), courses.end());
  std::sort(q.active.begin(), q.active.end());
  if (std::adjacent_find(q.active.begin(), q.active.end()) != q.active.end()) {
    throw ValidationError("query combination repeats a course");
  }
  if (q.active.back() >= catalog_size) throw ValidationError("query course index out of range");
  return q;
}

inline QueryCombo make_query(std::span<const std::string> courses, const CourseCatalog& catalog) {
  std::vector<std::size_t> idx;
  idx.reserve(courses.size());
  for (const auto& c : courses) idx.push_back(catalog.index_of(c));
  return make_query(idx, catalog.size());
}

// Records of one student grouped by period, chronologically.
using StudentTerms = std::map<std::string, std::vector<const RawRecord*>>;

inline std::map<std::string, StudentTerms> group_by_student(std::span<const RawRecord> records) {
  std::map<std::string, StudentTerms> out;
  for (const auto& r : records) out[r.student_id][r.period].push_back(&r);
  return out;
}

inline TermStep encode_records(std::span<const RawRecord* const> term, const CourseCatalog& catalog) {
  std::vector<CourseGrade> cg;
  cg.reserve(term.size());
  for (const auto* r : term) cg.emplace_back(catalog.index_of(r->course_id), bucket_grade(r->grade));
  return encode_term(cg, catalog.size());
}

// One example per student with at least two periods: every period but the
// last is history; the last period's courses form the query and the label is
// 1 iff all of them were passed.
inline BuildReport build_examples(std::span<const RawRecord> records, const CourseCatalog& catalog) {
  BuildReport report;
  for (const auto& [student, terms] : group_by_student(records)) {
    if (terms.size() < 2) {
      report.skipped_students.push_back(student);
      continue;
    }
    TrainExample ex;
    ex.student_id = student;
    auto last = std::prev(terms.end());
    for (auto it = terms.begin(); it != last; ++it) {
      ex.history.push_back(encode_records(it->second, catalog));
      ex.periods.push_back(it->first);
    }
    std::vector<std::size_t> courses;
    bool all_passed = true;
    for (const auto* r : last->second) {
      courses.push_back(catalog.index_of(r->course_id));
      all_passed = all_passed && is_passing(bucket_grade(r->grade));
    }
    ex.query = make_query(courses, catalog.size());
    ex.label = all_passed ? 1 : 0;
    report.examples.push_back(std::move(ex));
  }
  return report;
}

// Seeded shuffle, then the first round(fraction * n) examples go to
// validation. One example per student, so the split is disjoint by student.
inline DatasetSplit split_dataset(std::span<const TrainExample> examples, double validation_fraction,
                                  std::uint64_t seed) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ValidationError("validation fraction must lie in (0, 1)");
  }
  if (examples.size() < 2) throw ValidationError("need at least two examples to split");
  const auto n = examples.size();
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  if (n_val == 0 || n_val >= n) {
    throw ValidationError("split of " + std::to_string(n) + " examples at fraction " +
                          std::to_string(validation_fraction) + " leaves one side empty");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < n; ++k) {
    (k < n_val ? split.validation : split.train).push_back(examples[order[k]]);
  }
  return split;
}

// --- versioned JSON persistence -------------------------------------------

inline nlohmann::json dataset_to_json(const CourseCatalog& catalog, std::span<const TrainExample> examples) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["catalog"] = catalog.courses();
  auto& arr = doc["examples"] = nlohmann::json::array();
  for (const auto& ex : examples) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& step : ex.history) history.push_back(step.active);
    arr.push_back({{"student", ex.student_id}, {"history", history}, {"query", ex.query.active}, {"label", ex.label}});
  }
  return doc;
}

struct EncodedDataset {
  CourseCatalog catalog;
  std::vector<TrainExample> examples;
};

inline EncodedDataset dataset_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != 1) throw ValidationError("unsupported dataset version");
    EncodedDataset out{CourseCatalog(doc.at("catalog").get<std::vector<std::string>>()), {}};
    const auto c = out.catalog.size();
    for (const auto& e : doc.at("examples")) {
      TrainExample ex;
      ex.student_id = e.value("student", std::string{});
      for (const auto& h : e.at("history")) {
        TermStep step{c * kNumCategories, h.get<std::vector<std::size_t>>()};
        std::vector<CourseGrade> decoded;
        for (auto pos : step.active) {
          if (pos >= step.dim) throw ValidationError("history position out of range");
          decoded.emplace_back(pos / kNumCategories, kAllCategories[pos % kNumCategories]);
        }
        ex.history.push_back(encode_term(decoded, c));
      }
      if (ex.history.empty()) throw ValidationError("example with empty history");
      ex.query = make_query(e.at("query").get<std::vector<std::size_t>>(), c);
      ex.label = e.at("label").get<int>();
      if (ex.label != 0 && ex.label != 1) throw ValidationError("label must be 0 or 1");
      out.examples.push_back(std::move(ex));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed dataset document: ") + e.what());
  }
}

}  // namespace nextterm
