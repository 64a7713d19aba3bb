#pragma once

// Transcript file -> catalog -> examples -> split, as used by the CLI and
// the acceptance suite.

#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nextterm/checkpoint.hpp"
#include "nextterm/encoder.hpp"
#include "nextterm/metrics.hpp"
#include "nextterm/transcript.hpp"

namespace nextterm {

inline constexpr double kDefaultValidationFraction = 0.2;

struct PreparedData {
  std::vector<RawRecord> records;
  CourseCatalog catalog;
  std::vector<std::string> skipped_students;
  DatasetSplit split;
  FailureRates failure_rates;                   // from training-split students only
  std::map<std::string, double> history_gpa;    // per student, final term excluded
};

inline std::vector<RawRecord> load_transcript(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return parse_transcript(in);
}

inline PreparedData prepare_data(std::vector<RawRecord> records, double validation_fraction, std::uint64_t seed) {
  PreparedData d;
  d.records = std::move(records);
  d.catalog = build_catalog(d.records);
  auto built = build_examples(d.records, d.catalog);
  d.skipped_students = std::move(built.skipped_students);
  d.split = split_dataset(built.examples, validation_fraction, seed);

  std::set<std::string> train_students;
  for (const auto& ex : d.split.train) train_students.insert(ex.student_id);
  std::vector<RawRecord> train_records;
  for (const auto& r : d.records) {
    if (train_students.count(r.student_id)) train_records.push_back(r);
  }
  d.failure_rates = failure_rates(train_records);
  d.history_gpa = history_gpa_by_student(d.records);
  return d;
}

}  // namespace nextterm
