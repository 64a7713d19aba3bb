#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nextterm/encoder.hpp"
#include "nextterm/error.hpp"
#include "nextterm/metrics.hpp"
#include "nextterm/model.hpp"

namespace nextterm {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 200;
  std::size_t early_stop_patience = 20;
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 0;
  // Also train on every earlier term of each history (predict term k from
  // terms 0..k-1). Validation always uses the final-term examples only.
  bool prefix_examples = true;
  ModelDims dims;  // dims.courses is taken from the dataset

  void validate() const {
    if (!(adam.learning_rate > 0) || !(adam.eps > 0) || !(grad_clip_norm > 0)) {
      throw ValidationError("learning rate, adam eps and clip norm must be positive");
    }
    if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1)) {
      throw ValidationError("adam betas must lie in [0, 1)");
    }
    if (batch_size == 0 || max_epochs == 0) throw ValidationError("batch size and max epochs must be positive");
    if (early_stop_patience >= max_epochs) throw ValidationError("early-stop patience must be below max epochs");
  }
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const ModelParams& like) : m(zeros_like(like)), v(zeros_like(like)) {}
};

inline double global_norm(const ModelParams& grads) {
  double sq = 0;
  for (const auto* t : tensor_list(grads)) {
    for (double g : t->data) sq += g * g;
  }
  return std::sqrt(sq);
}

// Rescales to max_norm when the global L2 norm exceeds it. Returns the norm
// before clipping.
inline double clip_gradients(ModelParams& grads, double max_norm) {
  if (!(max_norm > 0)) throw ValidationError("clip norm must be positive");
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient");
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto* t : tensor_list(grads)) {
      for (double& g : t->data) g *= scale;
    }
  }
  return norm;
}

inline void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const AdamConfig& cfg) {
  if (!(params.dims == grads.dims) || !(state.m.dims == params.dims) || !(state.v.dims == params.dims)) {
    throw DimensionError("adam: parameter, gradient and moment shapes differ");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto p = tensor_list(params);
  auto g = tensor_list(grads);
  auto m = tensor_list(state.m);
  auto v = tensor_list(state.v);
  for (std::size_t t = 0; t < p.size(); ++t) {
    auto& pd = p[t]->data;
    const auto& gd = g[t]->data;
    auto& md = m[t]->data;
    auto& vd = v[t]->data;
    for (std::size_t k = 0; k < pd.size(); ++k) {
      md[k] = cfg.beta1 * md[k] + (1 - cfg.beta1) * gd[k];
      vd[k] = cfg.beta2 * vd[k] + (1 - cfg.beta2) * gd[k] * gd[k];
      pd[k] -= cfg.learning_rate * (md[k] / bc1) / (std::sqrt(vd[k] / bc2) + cfg.eps);
    }
  }
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double train_auc = 0;
  double validation_auc = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation_auc = 0;

  // One JSON object per line.
  void write_jsonl(std::ostream& out) const {
    for (const auto& e : epochs) {
      nlohmann::json j = {{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"train_auc", e.train_auc},
                          {"validation_auc", e.validation_auc},
                          {"best", e.epoch == best_epoch}};
      out << j.dump() << '\n';
    }
  }
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch)
      : NumericError("training diverged (non-finite loss) at epoch " + std::to_string(epoch) + ", batch " +
                     std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_, batch_;
};

// Prefix examples derived from one final-term example: for every history
// step k >= 1, history = steps 0..k-1, query = courses of step k, label =
// all of step k passed. The final-term example itself is not included.
inline std::vector<TrainExample> prefix_examples(const TrainExample& ex) {
  std::vector<TrainExample> out;
  for (std::size_t k = 1; k < ex.history.size(); ++k) {
    TrainExample p;
    p.student_id = ex.student_id;
    p.history.assign(ex.history.begin(), ex.history.begin() + static_cast<std::ptrdiff_t>(k));
    if (ex.periods.size() == ex.history.size()) {
      p.periods.assign(ex.periods.begin(), ex.periods.begin() + static_cast<std::ptrdiff_t>(k));
    }
    std::vector<std::size_t> courses;
    bool all_passed = true;
    for (const auto& [course, category] : decode_term(ex.history[k])) {
      courses.push_back(course);
      all_passed = all_passed && is_passing(category);
    }
    p.query = make_query(courses, ex.query.dim);
    p.label = all_passed ? 1 : 0;
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<double> predict_all(const ModelParams& params, std::span<const TrainExample> examples) {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(predict(params, ex.history, ex.query));
  return out;
}

inline double dataset_auc(const ModelParams& params, std::span<const TrainExample> examples) {
  std::vector<int> labels;
  for (const auto& ex : examples) labels.push_back(ex.label);
  const auto scores = predict_all(params, examples);
  return auc(scores, labels);
}

// Micro-batches of equal history length. Examples are shuffled, bucketed by
// length, chunked, and the chunk order is shuffled again.
inline std::vector<std::vector<std::size_t>> make_batches(std::span<const TrainExample> examples,
                                                          std::size_t batch_size, std::mt19937_64& rng) {
  std::vector<std::size_t> order(examples.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng);
  std::map<std::size_t, std::vector<std::size_t>> by_length;
  for (auto k : order) by_length[examples[k].history.size()].push_back(k);
  std::vector<std::vector<std::size_t>> batches;
  for (auto& [len, ids] : by_length) {
    for (std::size_t s = 0; s < ids.size(); s += batch_size) {
      batches.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(s),
                           ids.begin() + static_cast<std::ptrdiff_t>(std::min(ids.size(), s + batch_size)));
    }
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

inline std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  return std::mt19937_64(seq);
}

using EpochCallback = std::function<void(const EpochRecord&)>;

// Returns the parameters from the epoch with the best validation AUC.
inline TrainResult train(const DatasetSplit& data, const TrainConfig& config_in, const EpochCallback& on_epoch = {}) {
  config_in.validate();
  if (data.train.empty() || data.validation.empty()) throw ValidationError("train and validation sets must be non-empty");
  const std::size_t C = data.train.front().query.dim;
  for (const auto* set : {&data.train, &data.validation}) {
    for (const auto& ex : *set) {
      if (ex.query.dim != C || ex.history.empty() || ex.history.front().dim != C * kNumCategories) {
        throw ValidationError("examples are not encoded against a single catalog");
      }
    }
  }
  const auto count_pos = [](const auto& set) {
    return std::count_if(set.begin(), set.end(), [](const auto& e) { return e.label == 1; });
  };
  for (const auto* set : {&data.train, &data.validation}) {
    const auto pos = count_pos(*set);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(set->size())) {
      throw ValidationError("train and validation sets each need both labels for AUC model selection");
    }
  }

  TrainConfig cfg = config_in;
  cfg.dims.courses = C;
  std::vector<TrainExample> fit_set = data.train;
  if (cfg.prefix_examples) {
    for (const auto& ex : data.train) {
      auto more = prefix_examples(ex);
      fit_set.insert(fit_set.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    }
  }
  TrainResult result{init_params(cfg.dims, cfg.seed), {}};
  ModelParams& params = result.params;
  ModelParams best = params;
  AdamState adam(params);
  ModelParams grads = zeros_like(params);
  double best_auc = -1;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto rng = epoch_rng(cfg.seed, epoch);
    const auto batches = make_batches(fit_set, cfg.batch_size, rng);
    double loss_sum = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      set_zero(grads);
      const double scale = 1.0 / static_cast<double>(batches[b].size());
      double batch_loss = 0;
      for (auto k : batches[b]) {
        const auto& ex = fit_set[k];
        ForwardTrace tr;
        try {
          tr = forward(params, ex.history, ex.query);
        } catch (const NumericError&) {
          throw TrainingDiverged(epoch, b + 1);
        }
        batch_loss += bce_loss(tr.probability, ex.label);
        accumulate_gradients(params, tr, ex.label, grads, scale);
      }
      if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, b + 1);
      loss_sum += batch_loss;
      try {
        clip_gradients(grads, cfg.grad_clip_norm);
      } catch (const NumericError&) {
        throw TrainingDiverged(epoch, b + 1);
      }
      adam_step(params, grads, adam, cfg.adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(fit_set.size());
    rec.train_auc = dataset_auc(params, data.train);
    rec.validation_auc = dataset_auc(params, data.validation);
    result.report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.validation_auc > best_auc) {
      best_auc = rec.validation_auc;
      best = params;
      result.report.best_epoch = epoch;
      result.report.best_validation_auc = best_auc;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  params = std::move(best);
  return result;
}

}  // namespace nextterm
