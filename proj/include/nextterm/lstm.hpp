#pragma once

// Dense primitives and a single LSTM cell with hand-derived gradients.
//
//   i = sigmoid(W_i x + U_i h_prev + b_i)
//   f = sigmoid(W_f x + U_f h_prev + b_f)
//   g = tanh   (W_g x + U_g h_prev + b_g)
//   o = sigmoid(W_o x + U_o h_prev + b_o)
//   c = f * c_prev + i * g
//   h = o * tanh(c)
//
// No peepholes. Inputs are typically sparse one-hot vectors, so the input
// projections skip zero entries.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nextterm/error.hpp"

namespace nextterm {

using Vector = std::vector<double>;

// Row-major, 64-bit.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }

  std::size_t size() const noexcept { return data.size(); }
  void set_zero() noexcept { std::fill(data.begin(), data.end(), 0.0); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline bool all_finite(std::span<const double> v) noexcept {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// out += m * x, skipping zero entries of x.
inline void matvec_add(const Matrix& m, std::span<const double> x, std::span<double> out) {
  for (std::size_t c = 0; c < m.cols; ++c) {
    const double xc = x[c];
    if (xc == 0.0) continue;
    for (std::size_t r = 0; r < m.rows; ++r) out[r] += m(r, c) * xc;
  }
}

// out += m^T * y
inline void matvec_t_add(const Matrix& m, std::span<const double> y, std::span<double> out) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    const double* row = &m.data[r * m.cols];
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c] * yr;
  }
}

// g += scale * y x^T, skipping zero entries of x.
inline void outer_add(Matrix& g, std::span<const double> y, std::span<const double> x, double scale = 1.0) {
  thread_local std::vector<std::size_t> nz;
  nz.clear();
  for (std::size_t c = 0; c < g.cols; ++c) {
    if (x[c] != 0.0) nz.push_back(c);
  }
  if (nz.empty()) return;
  for (std::size_t r = 0; r < g.rows; ++r) {
    const double yr = y[r] * scale;
    if (yr == 0.0) continue;
    double* row = &g.data[r * g.cols];
    for (auto c : nz) row[c] += yr * x[c];
  }
}

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCandidateGate = 2, kOutputGate = 3 };
inline constexpr std::size_t kNumGates = 4;
inline constexpr std::array<const char*, kNumGates> kGateSuffix = {"i", "f", "g", "o"};

struct LstmCellParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::array<Matrix, kNumGates> W;  // hidden x input
  std::array<Matrix, kNumGates> U;  // hidden x hidden
  std::array<Matrix, kNumGates> b;  // hidden x 1

  LstmCellParams() = default;
  LstmCellParams(std::size_t input, std::size_t hidden) : input_size(input), hidden_size(hidden) {
    for (std::size_t k = 0; k < kNumGates; ++k) {
      W[k] = Matrix(hidden, input);
      U[k] = Matrix(hidden, hidden);
      b[k] = Matrix(hidden, 1);
    }
  }

  friend bool operator==(const LstmCellParams&, const LstmCellParams&) = default;
};

struct LstmCache {
  Vector x, h_prev, c_prev;
  std::array<Vector, kNumGates> pre;   // gate pre-activations
  std::array<Vector, kNumGates> gate;  // i, f, g, o after nonlinearity
  Vector c, tanh_c, h;
};

inline LstmCache lstm_cell_forward(const LstmCellParams& p, std::span<const double> x,
                                   std::span<const double> h_prev, std::span<const double> c_prev) {
  const auto H = p.hidden_size;
  if (x.size() != p.input_size || h_prev.size() != H || c_prev.size() != H) {
    throw DimensionError("lstm cell: expected x[" + std::to_string(p.input_size) + "], h/c[" +
                         std::to_string(H) + "], got x[" + std::to_string(x.size()) + "], h[" +
                         std::to_string(h_prev.size()) + "], c[" + std::to_string(c_prev.size()) + "]");
  }
  LstmCache cache;
  cache.x.assign(x.begin(), x.end());
  cache.h_prev.assign(h_prev.begin(), h_prev.end());
  cache.c_prev.assign(c_prev.begin(), c_prev.end());
  for (std::size_t k = 0; k < kNumGates; ++k) {
    auto& z = cache.pre[k];
    z.assign(p.b[k].data.begin(), p.b[k].data.end());
    matvec_add(p.W[k], x, z);
    matvec_add(p.U[k], h_prev, z);
    auto& a = cache.gate[k];
    a.resize(H);
    for (std::size_t j = 0; j < H; ++j) a[j] = (k == kCandidateGate) ? std::tanh(z[j]) : sigmoid(z[j]);
  }
  const auto& i = cache.gate[kInputGate];
  const auto& f = cache.gate[kForgetGate];
  const auto& g = cache.gate[kCandidateGate];
  const auto& o = cache.gate[kOutputGate];
  cache.c.resize(H);
  cache.tanh_c.resize(H);
  cache.h.resize(H);
  for (std::size_t j = 0; j < H; ++j) {
    cache.c[j] = f[j] * c_prev[j] + i[j] * g[j];
    cache.tanh_c[j] = std::tanh(cache.c[j]);
    cache.h[j] = o[j] * cache.tanh_c[j];
  }
  if (!all_finite(cache.c) || !all_finite(cache.h)) throw NumericError("lstm cell produced a non-finite state");
  return cache;
}

struct LstmStateGrad {
  Vector dh_prev;
  Vector dc_prev;
};

// Accumulates parameter gradients into `grads` given upstream dL/dh and
// dL/dc for this step; returns gradients for the previous state.
inline LstmStateGrad lstm_cell_backward(const LstmCellParams& p, const LstmCache& cache,
                                        std::span<const double> dh, std::span<const double> dc_next,
                                        LstmCellParams& grads) {
  const auto H = p.hidden_size;
  const auto& i = cache.gate[kInputGate];
  const auto& f = cache.gate[kForgetGate];
  const auto& g = cache.gate[kCandidateGate];
  const auto& o = cache.gate[kOutputGate];

  std::array<Vector, kNumGates> dz;
  for (auto& v : dz) v.resize(H);
  LstmStateGrad out{Vector(H, 0.0), Vector(H, 0.0)};
  for (std::size_t j = 0; j < H; ++j) {
    const double dc = dc_next[j] + dh[j] * o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
    dz[kOutputGate][j] = dh[j] * cache.tanh_c[j] * o[j] * (1.0 - o[j]);
    dz[kInputGate][j] = dc * g[j] * i[j] * (1.0 - i[j]);
    dz[kForgetGate][j] = dc * cache.c_prev[j] * f[j] * (1.0 - f[j]);
    dz[kCandidateGate][j] = dc * i[j] * (1.0 - g[j] * g[j]);
    out.dc_prev[j] = dc * f[j];
  }
  for (std::size_t k = 0; k < kNumGates; ++k) {
    outer_add(grads.W[k], dz[k], cache.x);
    outer_add(grads.U[k], dz[k], cache.h_prev);
    for (std::size_t j = 0; j < H; ++j) grads.b[k].data[j] += dz[k][j];
    matvec_t_add(p.U[k], dz[k], out.dh_prev);
  }
  return out;
}

}  // namespace nextterm
