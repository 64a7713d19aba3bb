#pragma once

// Dual-input success model.
//
//   history (term vectors) --> forward LSTM  --h_fwd(last)--+
//                          \-> backward LSTM --h_bwd(first)-+--> merge (ReLU) --> out (sigmoid) --> p
//   query (course multi-hot) --> combo (ReLU) --------------+
//
// Both directions start from zero state. The merge layer consumes
// concat(h_fwd, h_bwd, combo).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "nextterm/encoder.hpp"
#include "nextterm/error.hpp"
#include "nextterm/lstm.hpp"
#include "nextterm/transcript.hpp"

namespace nextterm {

struct ModelDims {
  std::size_t courses = 0;  // C
  std::size_t hidden = 64;  // H, per direction
  std::size_t combo = 32;   // K
  std::size_t merge = 64;   // M

  std::size_t step_input() const noexcept { return courses * kNumCategories; }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct DenseLayer {
  Matrix W;  // out x in
  Matrix b;  // out x 1

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out) : W(out, in), b(out, 1) {}

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Also used as the gradient and optimizer-moment container.
struct ModelParams {
  ModelDims dims;
  LstmCellParams fwd;
  LstmCellParams bwd;
  DenseLayer combo;
  DenseLayer merge;
  DenseLayer out;

  ModelParams() = default;
  explicit ModelParams(const ModelDims& d)
      : dims(d),
        fwd(d.step_input(), d.hidden),
        bwd(d.step_input(), d.hidden),
        combo(d.courses, d.combo),
        merge(2 * d.hidden + d.combo, d.merge),
        out(d.merge, 1) {}

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Visits every tensor with its checkpoint name in a fixed order:
// fwd.{W,U,b}_{i,f,g,o}, bwd.*, combo.{W,b}, merge.{W,b}, out.{W,b}.
template <class P, class F>
  requires std::is_same_v<std::remove_const_t<P>, ModelParams>
void for_each_tensor(P& params, F&& f) {
  auto cell = [&](auto& c, const std::string& prefix) {
    for (std::size_t k = 0; k < kNumGates; ++k) {
      f(prefix + ".W_" + kGateSuffix[k], c.W[k]);
      f(prefix + ".U_" + kGateSuffix[k], c.U[k]);
      f(prefix + ".b_" + kGateSuffix[k], c.b[k]);
    }
  };
  cell(params.fwd, "fwd");
  cell(params.bwd, "bwd");
  f(std::string("combo.W"), params.combo.W);
  f(std::string("combo.b"), params.combo.b);
  f(std::string("merge.W"), params.merge.W);
  f(std::string("merge.b"), params.merge.b);
  f(std::string("out.W"), params.out.W);
  f(std::string("out.b"), params.out.b);
}

inline std::vector<Matrix*> tensor_list(ModelParams& p) {
  std::vector<Matrix*> out;
  for_each_tensor(p, [&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

inline std::vector<const Matrix*> tensor_list(const ModelParams& p) {
  std::vector<const Matrix*> out;
  for_each_tensor(p, [&](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

inline std::size_t parameter_count(const ModelParams& p) {
  std::size_t n = 0;
  for (const auto* m : tensor_list(p)) n += m->size();
  return n;
}

inline void set_zero(ModelParams& p) {
  for (auto* m : tensor_list(p)) m->set_zero();
}

inline ModelParams zeros_like(const ModelParams& p) { return ModelParams(p.dims); }

// Glorot-uniform weights, zero biases, forget-gate bias 1.
inline ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  if (dims.courses == 0 || dims.hidden == 0 || dims.combo == 0 || dims.merge == 0) {
    throw DimensionError("all model dimensions must be positive");
  }
  ModelParams p(dims);
  std::mt19937_64 rng(seed);
  for_each_tensor(p, [&](const std::string& name, Matrix& m) {
    if (m.cols == 1 && name.find(".b") != std::string::npos) {
      const bool forget = name.ends_with(".b_f");
      std::fill(m.data.begin(), m.data.end(), forget ? 1.0 : 0.0);
      return;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : m.data) v = dist(rng);
  });
  return p;
}

struct ForwardTrace {
  ModelDims dims;
  std::vector<LstmCache> fwd;  // indexed by time step
  std::vector<LstmCache> bwd;  // indexed by time step (processed last-to-first)
  Vector query;
  Vector combo_pre, combo_act;
  Vector merge_in, merge_pre, merge_act;
  double logit = 0.0;
  double probability = 0.5;
};

inline ForwardTrace forward(const ModelParams& params, std::span<const TermStep> history, const QueryCombo& query) {
  const auto& d = params.dims;
  if (history.empty()) throw ValidationError("history must contain at least one term");
  if (query.dim != d.courses) {
    throw DimensionError("query has dimension " + std::to_string(query.dim) + ", model expects " +
                         std::to_string(d.courses));
  }
  if (query.active.empty()) throw ValidationError("query combination must contain at least one course");
  for (const auto& step : history) {
    if (step.dim != d.step_input()) {
      throw DimensionError("term step has dimension " + std::to_string(step.dim) + ", model expects " +
                           std::to_string(d.step_input()));
    }
  }

  const auto T = history.size();
  const auto H = d.hidden;
  ForwardTrace tr;
  tr.dims = d;
  tr.fwd.resize(T);
  tr.bwd.resize(T);

  std::vector<Vector> xs(T);
  for (std::size_t t = 0; t < T; ++t) xs[t] = history[t].dense();

  Vector h(H, 0.0), c(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    tr.fwd[t] = lstm_cell_forward(params.fwd, xs[t], h, c);
    h = tr.fwd[t].h;
    c = tr.fwd[t].c;
  }
  h.assign(H, 0.0);
  c.assign(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    tr.bwd[t] = lstm_cell_forward(params.bwd, xs[t], h, c);
    h = tr.bwd[t].h;
    c = tr.bwd[t].c;
  }

  tr.query = query.dense();
  tr.combo_pre = params.combo.b.data;
  matvec_add(params.combo.W, tr.query, tr.combo_pre);
  tr.combo_act.resize(d.combo);
  for (std::size_t j = 0; j < d.combo; ++j) tr.combo_act[j] = std::max(0.0, tr.combo_pre[j]);

  tr.merge_in.reserve(2 * H + d.combo);
  tr.merge_in.insert(tr.merge_in.end(), tr.fwd[T - 1].h.begin(), tr.fwd[T - 1].h.end());
  tr.merge_in.insert(tr.merge_in.end(), tr.bwd[0].h.begin(), tr.bwd[0].h.end());
  tr.merge_in.insert(tr.merge_in.end(), tr.combo_act.begin(), tr.combo_act.end());
  tr.merge_pre = params.merge.b.data;
  matvec_add(params.merge.W, tr.merge_in, tr.merge_pre);
  tr.merge_act.resize(d.merge);
  for (std::size_t j = 0; j < d.merge; ++j) tr.merge_act[j] = std::max(0.0, tr.merge_pre[j]);

  tr.logit = params.out.b.data[0];
  for (std::size_t j = 0; j < d.merge; ++j) tr.logit += params.out.W.data[j] * tr.merge_act[j];
  if (!std::isfinite(tr.logit)) throw NumericError("non-finite logit");
  tr.probability = sigmoid(tr.logit);
  return tr;
}

inline double predict(const ModelParams& params, std::span<const TermStep> history, const QueryCombo& query) {
  return forward(params, history, query).probability;
}

inline constexpr double kBceEpsilon = 1e-12;

inline double bce_loss(double p, int label) {
  p = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// Adds scale * d(bce)/d(params) into `grads`. The logit gradient is p - y
// (the clamp only matters within 1e-12 of 0 or 1).
inline void accumulate_gradients(const ModelParams& params, const ForwardTrace& tr, int label, ModelParams& grads,
                                 double scale = 1.0) {
  const auto& d = params.dims;
  if (!(tr.dims == d) || !(grads.dims == d)) throw DimensionError("trace or gradient dims do not match params");
  if (tr.fwd.empty() || tr.fwd.size() != tr.bwd.size()) throw ValidationError("malformed forward trace");
  const auto H = d.hidden;
  const auto T = tr.fwd.size();

  const double dlogit = scale * (tr.probability - static_cast<double>(label));
  grads.out.b.data[0] += dlogit;
  Vector dmerge(d.merge, 0.0);
  for (std::size_t j = 0; j < d.merge; ++j) {
    grads.out.W.data[j] += dlogit * tr.merge_act[j];
    dmerge[j] = tr.merge_pre[j] > 0.0 ? dlogit * params.out.W.data[j] : 0.0;
  }

  outer_add(grads.merge.W, dmerge, tr.merge_in);
  for (std::size_t j = 0; j < d.merge; ++j) grads.merge.b.data[j] += dmerge[j];
  Vector dmerge_in(2 * H + d.combo, 0.0);
  matvec_t_add(params.merge.W, dmerge, dmerge_in);

  Vector dcombo(d.combo, 0.0);
  for (std::size_t j = 0; j < d.combo; ++j) {
    dcombo[j] = tr.combo_pre[j] > 0.0 ? dmerge_in[2 * H + j] : 0.0;
    grads.combo.b.data[j] += dcombo[j];
  }
  outer_add(grads.combo.W, dcombo, tr.query);

  Vector dh(dmerge_in.begin(), dmerge_in.begin() + static_cast<std::ptrdiff_t>(H));
  Vector dc(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    auto s = lstm_cell_backward(params.fwd, tr.fwd[t], dh, dc, grads.fwd);
    dh = std::move(s.dh_prev);
    dc = std::move(s.dc_prev);
  }

  dh.assign(dmerge_in.begin() + static_cast<std::ptrdiff_t>(H), dmerge_in.begin() + static_cast<std::ptrdiff_t>(2 * H));
  dc.assign(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    auto s = lstm_cell_backward(params.bwd, tr.bwd[t], dh, dc, grads.bwd);
    dh = std::move(s.dh_prev);
    dc = std::move(s.dc_prev);
  }
}

inline ModelParams backward(const ModelParams& params, const ForwardTrace& trace, int label) {
  auto grads = zeros_like(params);
  accumulate_gradients(params, trace, label, grads);
  return grads;
}

}  // namespace nextterm
