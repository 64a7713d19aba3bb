#pragma once

// Raw grade transcripts: parsing, validation, grade bucketing and the
// course catalog that binds course ids to dense indices.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "nextterm/error.hpp"

namespace nextterm {

inline constexpr int kMinGrade = 0;
inline constexpr int kMaxGrade = 20;
inline constexpr int kPassMark = 10;
inline constexpr std::string_view kWithdrawalToken = "R";
inline constexpr std::string_view kTranscriptHeader = "student_id,course_id,period,grade";

// A numeric grade in [0, 20] or a withdrawal.
class Grade {
 public:
  static constexpr Grade withdrawn() noexcept { return Grade{kWithdrawn}; }

  static Grade numeric(int value) {
    if (value < kMinGrade || value > kMaxGrade) {
      throw ValidationError("grade out of range [0, 20]: " + std::to_string(value));
    }
    return Grade{value};
  }

  // Accepts a decimal integer or the withdrawal token.
  static Grade parse(std::string_view text) {
    if (text == kWithdrawalToken) return withdrawn();
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
      throw ValidationError("grade is neither an integer nor 'R': '" + std::string(text) + "'");
    }
    return numeric(value);
  }

  constexpr bool is_withdrawal() const noexcept { return value_ == kWithdrawn; }

  int value() const {
    if (is_withdrawal()) throw ValidationError("withdrawal has no numeric grade");
    return value_;
  }

  std::string to_string() const {
    return is_withdrawal() ? std::string(kWithdrawalToken) : std::to_string(value_);
  }

  friend constexpr bool operator==(Grade, Grade) = default;

 private:
  static constexpr int kWithdrawn = -1;
  constexpr explicit Grade(int v) noexcept : value_(v) {}
  int value_;
};

struct RawRecord {
  std::string student_id;
  std::string course_id;
  std::string period;  // lexicographic order is chronological order
  Grade grade = Grade::withdrawn();

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

// Ordinals are persisted in encoded datasets and checkpoints; do not reorder.
enum class GradeCategory : std::size_t {
  Withdraw = 0,
  NotApproved = 1,
  Bad = 2,
  Excellent = 3,
};

inline constexpr std::size_t kNumCategories = 4;

inline constexpr std::array<GradeCategory, kNumCategories> kAllCategories = {
    GradeCategory::Withdraw, GradeCategory::NotApproved, GradeCategory::Bad,
    GradeCategory::Excellent};

constexpr std::size_t category_index(GradeCategory c) noexcept {
  return static_cast<std::size_t>(c);
}

constexpr std::string_view category_name(GradeCategory c) noexcept {
  switch (c) {
    case GradeCategory::Withdraw: return "withdraw";
    case GradeCategory::NotApproved: return "not_approved";
    case GradeCategory::Bad: return "bad";
    case GradeCategory::Excellent: return "excellent";
  }
  return "?";
}

// R -> Withdraw, 0..9 -> NotApproved, 10..12 -> Bad, 13..20 -> Excellent.
inline GradeCategory bucket_grade(Grade grade) {
  if (grade.is_withdrawal()) return GradeCategory::Withdraw;
  const int g = grade.value();
  if (g < kPassMark) return GradeCategory::NotApproved;
  if (g <= 12) return GradeCategory::Bad;
  return GradeCategory::Excellent;
}

// A withdrawal is not a passing grade.
constexpr bool is_passing(GradeCategory c) noexcept {
  return c == GradeCategory::Bad || c == GradeCategory::Excellent;
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

// Parses the transcript CSV. Row order is preserved. Throws ParseError for
// structural problems and ValidationError (with the line number in the
// message) for domain violations.
inline std::vector<RawRecord> parse_transcript(std::istream& in) {
  std::vector<RawRecord> records;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line != kTranscriptHeader) {
        throw ParseError(line_no, "expected header '" + std::string(kTranscriptHeader) + "'");
      }
      have_header = true;
      continue;
    }
    if (line.empty()) continue;

    const auto fields = detail::split_commas(line);
    if (fields.size() != 4) {
      throw ParseError(line_no, "expected 4 columns, got " + std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < 3; ++i) {
      if (fields[i].empty()) throw ParseError(line_no, "empty field in column " + std::to_string(i + 1));
    }

    RawRecord rec;
    rec.student_id = std::string(fields[0]);
    rec.course_id = std::string(fields[1]);
    rec.period = std::string(fields[2]);
    try {
      rec.grade = Grade::parse(fields[3]);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.emplace(rec.student_id, rec.course_id, rec.period).second) {
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate (student, course, period) " +
                            rec.student_id + "/" + rec.course_id + "/" + rec.period);
    }
    records.push_back(std::move(rec));
  }
  if (!have_header) throw ParseError(1, "missing header");
  return records;
}

inline std::vector<RawRecord> parse_transcript(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_transcript(in);
}

inline void write_transcript(std::ostream& out, std::span<const RawRecord> records) {
  out << kTranscriptHeader << '\n';
  for (const auto& r : records) {
    out << r.student_id << ',' << r.course_id << ',' << r.period << ',' << r.grade.to_string() << '\n';
  }
}

inline std::string serialize_transcript(std::span<const RawRecord> records) {
  std::ostringstream out;
  write_transcript(out, records);
  return out.str();
}

// Distinct course ids in lexicographic order with dense indices.
class CourseCatalog {
 public:
  CourseCatalog() = default;

  explicit CourseCatalog(std::vector<std::string> courses) : courses_(std::move(courses)) {
    std::sort(courses_.begin(), courses_.end());
    if (std::adjacent_find(courses_.begin(), courses_.end()) != courses_.end()) {
      throw ValidationError("catalog contains duplicate course ids");
    }
    for (std::size_t i = 0; i < courses_.size(); ++i) index_.emplace(courses_[i], i);
  }

  std::size_t size() const noexcept { return courses_.size(); }
  bool empty() const noexcept { return courses_.empty(); }
  bool contains(const std::string& course) const { return index_.count(course) != 0; }

  std::size_t index_of(const std::string& course) const {
    auto it = index_.find(course);
    if (it == index_.end()) throw UnknownCourseError(course);
    return it->second;
  }

  const std::string& course_at(std::size_t index) const { return courses_.at(index); }
  const std::vector<std::string>& courses() const noexcept { return courses_; }

  friend bool operator==(const CourseCatalog& a, const CourseCatalog& b) {
    return a.courses_ == b.courses_;
  }

 private:
  std::vector<std::string> courses_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

inline CourseCatalog build_catalog(std::span<const RawRecord> records) {
  if (records.empty()) throw ValidationError("cannot build a catalog from zero records");
  std::set<std::string> distinct;
  for (const auto& r : records) distinct.insert(r.course_id);
  return CourseCatalog(std::vector<std::string>(distinct.begin(), distinct.end()));
}

}  // namespace nextterm
