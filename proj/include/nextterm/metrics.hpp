#pragma once

// Exact AUC, GPA bands, difficulty tiers, the GPA x difficulty grid, and a
// GPA-only logistic baseline for comparison.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nextterm/checkpoint.hpp"
#include "nextterm/encoder.hpp"
#include "nextterm/error.hpp"
#include "nextterm/model.hpp"
#include "nextterm/transcript.hpp"

namespace nextterm {

struct ScoredExample {
  double score = 0.0;
  int label = 0;
};

// Mann-Whitney statistic: fraction of (positive, negative) pairs ranked
// correctly, ties counted as one half. O(n log n).
inline double auc(std::span<const ScoredExample> scored) {
  std::vector<ScoredExample> s(scored.begin(), scored.end());
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  double n_pos = 0, n_neg = 0, correct = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    double pos = 0, neg = 0;
    while (j < s.size() && s[j].score == s[i].score) {
      (s[j].label == 1 ? pos : neg) += 1;
      ++j;
    }
    // each positive in this group beats every earlier negative, ties with this group's negatives
    correct += pos * n_neg + 0.5 * pos * neg;
    n_pos += pos;
    n_neg += neg;
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw ValidationError("AUC is undefined without both positive and negative labels");
  return correct / (n_pos * n_neg);
}

inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("scores and labels differ in length");
  std::vector<ScoredExample> s(scores.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = {scores[k], labels[k]};
  return auc(s);
}

// Mean of numeric grades; withdrawals excluded.
inline double gpa_of(std::span<const RawRecord> history) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : history) {
    if (r.grade.is_withdrawal()) continue;
    sum += r.grade.value();
    ++n;
  }
  if (n == 0) throw ValidationError("GPA undefined: no numeric grades");
  return sum / static_cast<double>(n);
}

// GPA over every period except the student's last one, i.e. what the
// model sees as history. Students with fewer than two periods, or without a
// numeric history grade, are omitted.
inline std::map<std::string, double> history_gpa_by_student(std::span<const RawRecord> records) {
  std::map<std::string, double> out;
  for (const auto& [student, terms] : group_by_student(records)) {
    if (terms.size() < 2) continue;
    std::vector<RawRecord> hist;
    for (auto it = terms.begin(); it != std::prev(terms.end()); ++it) {
      for (const auto* r : it->second) hist.push_back(*r);
    }
    try {
      out[student] = gpa_of(hist);
    } catch (const ValidationError&) {
    }
  }
  return out;
}

enum class GpaBand : std::size_t { Low = 0, Middle = 1, High = 2 };

// [0,12) low, [12,16] middle, (16,20] high.
constexpr GpaBand gpa_band(double gpa) noexcept {
  if (gpa < 12.0) return GpaBand::Low;
  if (gpa <= 16.0) return GpaBand::Middle;
  return GpaBand::High;
}

inline constexpr std::array<const char*, 3> kBandNames = {"gpa<12", "12<=gpa<=16", "gpa>16"};

enum class DifficultyTier : std::size_t { Hard = 0, Medium = 1, Easy = 2 };

inline constexpr std::array<const char*, 3> kTierNames = {"hard", "medium", "easy"};
inline constexpr double kHighFailureRate = 0.30;

// Fraction of NotApproved + Withdraw outcomes per course.
inline FailureRates failure_rates(std::span<const RawRecord> records) {
  std::map<std::string, std::pair<double, double>> counts;
  for (const auto& r : records) {
    auto& [fail, total] = counts[r.course_id];
    total += 1;
    if (!is_passing(bucket_grade(r.grade))) fail += 1;
  }
  FailureRates out;
  for (const auto& [course, c] : counts) out[course] = c.first / c.second;
  return out;
}

// Share of courses with failure rate > 30%: >= 0.8 hard, >= 0.5 medium,
// anything lower is easy.
inline DifficultyTier difficulty_tier(std::span<const std::string> combo, const FailureRates& rates) {
  if (combo.empty()) throw ValidationError("cannot classify an empty combination");
  std::size_t over = 0;
  for (const auto& course : combo) {
    auto it = rates.find(course);
    if (it == rates.end()) throw UnknownCourseError(course);
    if (it->second > kHighFailureRate) ++over;
  }
  const double frac = static_cast<double>(over) / static_cast<double>(combo.size());
  if (frac >= 0.8) return DifficultyTier::Hard;
  if (frac >= 0.5) return DifficultyTier::Medium;
  return DifficultyTier::Easy;
}

using TierCombos = std::array<std::vector<std::string>, 3>;  // hard, medium, easy

// Builds same-size hard/medium/easy combinations from historical failure
// rates: hard = the `size` highest-failure courses, easy = the `size`
// lowest, medium = half of each. Throws if the catalog cannot support the
// three tiers.
inline TierCombos make_tier_combos(const FailureRates& rates, std::size_t size = 4) {
  if (size < 2) throw ValidationError("tier combinations need at least two courses");
  std::vector<std::pair<double, std::string>> by_rate;
  for (const auto& [course, rate] : rates) by_rate.emplace_back(rate, course);
  std::sort(by_rate.begin(), by_rate.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (by_rate.size() < 2 * size) throw ValidationError("catalog too small for tier combinations");

  TierCombos combos;
  const std::size_t half_hard = (size + 1) / 2;
  for (std::size_t k = 0; k < size; ++k) combos[0].push_back(by_rate[k].second);
  for (std::size_t k = 0; k < half_hard; ++k) combos[1].push_back(by_rate[k].second);
  for (std::size_t k = 0; k < size - half_hard; ++k) combos[1].push_back(by_rate[by_rate.size() - 1 - k].second);
  for (std::size_t k = 0; k < size; ++k) combos[2].push_back(by_rate[by_rate.size() - 1 - k].second);

  for (std::size_t t = 0; t < 3; ++t) {
    if (difficulty_tier(combos[t], rates) != static_cast<DifficultyTier>(t)) {
      throw ValidationError(std::string("course failure rates cannot produce a ") + kTierNames[t] +
                            " combination of size " + std::to_string(size));
    }
  }
  return combos;
}

struct Fig4Grid {
  std::array<std::array<double, 3>, 3> mean{};  // [band][tier]
  std::array<std::size_t, 3> band_counts{};
  TierCombos combos;

  bool rows_non_increasing_with_difficulty() const {
    for (const auto& row : mean) {
      if (!(row[0] <= row[1] && row[1] <= row[2])) return false;
    }
    return true;
  }

  bool columns_non_decreasing_with_gpa() const {
    for (std::size_t t = 0; t < 3; ++t) {
      if (!(mean[0][t] <= mean[1][t] && mean[1][t] <= mean[2][t])) return false;
    }
    return true;
  }
};

// Mean predicted success per (GPA band, difficulty tier) over validation
// students.
inline Fig4Grid fig4_experiment(const ModelParams& model, const CourseCatalog& catalog,
                                std::span<const TrainExample> validation,
                                const std::map<std::string, double>& gpa_by_student, const TierCombos& tiers,
                                const FailureRates& rates) {
  for (std::size_t t = 0; t < 3; ++t) {
    if (difficulty_tier(tiers[t], rates) != static_cast<DifficultyTier>(t)) {
      throw ValidationError(std::string("tier combination ") + std::to_string(t) + " is not classified " +
                            kTierNames[t]);
    }
  }
  std::array<QueryCombo, 3> queries;
  for (std::size_t t = 0; t < 3; ++t) queries[t] = make_query(tiers[t], catalog);

  Fig4Grid grid;
  grid.combos = tiers;
  std::array<std::array<double, 3>, 3> sum{};
  for (const auto& ex : validation) {
    auto it = gpa_by_student.find(ex.student_id);
    if (it == gpa_by_student.end()) throw ValidationError("no GPA for validation student " + ex.student_id);
    const auto band = static_cast<std::size_t>(gpa_band(it->second));
    ++grid.band_counts[band];
    for (std::size_t t = 0; t < 3; ++t) sum[band][t] += predict(model, ex.history, queries[t]);
  }
  for (std::size_t b = 0; b < 3; ++b) {
    if (grid.band_counts[b] == 0) {
      throw ValidationError("empty GPA band " + std::string(kBandNames[b]) + "; populations: " +
                            std::to_string(grid.band_counts[0]) + "/" + std::to_string(grid.band_counts[1]) + "/" +
                            std::to_string(grid.band_counts[2]));
    }
    for (std::size_t t = 0; t < 3; ++t) grid.mean[b][t] = sum[b][t] / static_cast<double>(grid.band_counts[b]);
  }
  return grid;
}

inline nlohmann::json fig4_to_json(const Fig4Grid& g) {
  nlohmann::json doc;
  doc["bands"] = kBandNames;
  doc["tiers"] = kTierNames;
  doc["band_counts"] = g.band_counts;
  doc["mean_probability"] = g.mean;
  doc["combinations"] = g.combos;
  return doc;
}

inline std::string fig4_to_csv(const Fig4Grid& g) {
  std::ostringstream out;
  out.precision(6);
  out << "band,count,hard,medium,easy\n";
  for (std::size_t b = 0; b < 3; ++b) {
    out << kBandNames[b] << ',' << g.band_counts[b];
    for (double v : g.mean[b]) out << ',' << std::fixed << v;
    out << '\n';
  }
  return out.str();
}

// One-feature logistic regression p = sigmoid(w * gpa + b), fitted by
// Newton's method on the log-likelihood with a tiny ridge term.
struct GpaLogistic {
  double weight = 0.0;
  double bias = 0.0;

  double predict(double gpa) const { return sigmoid(weight * gpa + bias); }

  static GpaLogistic fit(std::span<const double> gpa, std::span<const int> labels, int iterations = 50) {
    if (gpa.size() != labels.size() || gpa.empty()) throw DimensionError("gpa/labels size mismatch");
    // centre for conditioning
    const double mu = std::accumulate(gpa.begin(), gpa.end(), 0.0) / static_cast<double>(gpa.size());
    double w = 0, b = 0;
    constexpr double ridge = 1e-6;
    for (int it = 0; it < iterations; ++it) {
      double gw = -ridge * w, gb = 0, hww = ridge, hwb = 0, hbb = 0;
      for (std::size_t k = 0; k < gpa.size(); ++k) {
        const double x = gpa[k] - mu;
        const double p = sigmoid(w * x + b);
        const double r = labels[k] - p;
        const double s = p * (1 - p);
        gw += r * x;
        gb += r;
        hww += s * x * x;
        hwb += s * x;
        hbb += s;
      }
      const double det = hww * hbb - hwb * hwb;
      if (!(std::abs(det) > 1e-300)) break;
      const double dw = (hbb * gw - hwb * gb) / det;
      const double db = (hww * gb - hwb * gw) / det;
      w += dw;
      b += db;
      if (std::abs(dw) < 1e-12 && std::abs(db) < 1e-12) break;
    }
    return {w, b - w * mu};
  }
};

}  // namespace nextterm
