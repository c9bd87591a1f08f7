#include "gfm4ga/tensor.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gfm4ga {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  return Rng(seq);
}

double squared_norm(const ConstTensorRefs& tensors) {
  double total = 0.0;
  for (const Matrix* t : tensors) total += t->squaredNorm();
  return total;
}

double distance(const ConstTensorRefs& a, const ConstTensorRefs& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("distance: tensor lists differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols()) {
      throw std::invalid_argument("distance: tensor shapes differ");
    }
    total += (*a[i] - *b[i]).squaredNorm();
  }
  return std::sqrt(total);
}

std::size_t total_size(const ConstTensorRefs& tensors) {
  std::size_t n = 0;
  for (const Matrix* t : tensors) n += static_cast<std::size_t>(t->size());
  return n;
}

std::vector<double> flatten(const ConstTensorRefs& tensors) {
  std::vector<double> out;
  out.reserve(total_size(tensors));
  for (const Matrix* t : tensors) {
    // Row-major within each tensor.
    for (Eigen::Index r = 0; r < t->rows(); ++r) {
      for (Eigen::Index c = 0; c < t->cols(); ++c) out.push_back((*t)(r, c));
    }
  }
  return out;
}

void unflatten(std::span<const double> values, const TensorRefs& tensors) {
  std::size_t pos = 0;
  for (Matrix* t : tensors) {
    if (pos + static_cast<std::size_t>(t->size()) > values.size()) {
      throw std::invalid_argument("unflatten: not enough values");
    }
    for (Eigen::Index r = 0; r < t->rows(); ++r) {
      for (Eigen::Index c = 0; c < t->cols(); ++c) (*t)(r, c) = values[pos++];
    }
  }
  if (pos != values.size()) {
    throw std::invalid_argument("unflatten: too many values");
  }
}

void set_zero(const TensorRefs& tensors) {
  for (Matrix* t : tensors) t->setZero();
}

void add_scaled(const TensorRefs& dst, const ConstTensorRefs& src,
                double scale) {
  if (dst.size() != src.size()) {
    throw std::invalid_argument("add_scaled: tensor lists differ in length");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] += scale * *src[i];
}

double clip_global_norm(const TensorRefs& grads, double max_norm) {
  double sq = 0.0;
  for (const Matrix* g : grads) sq += g->squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Matrix* g : grads) *g *= scale;
  }
  return norm;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  double peak = values[0];
  for (double v : values) peak = std::max(peak, v);
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

Matrix row_normalized_gaussian(int rows, int cols, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = normal(rng);
    const double n = m.row(r).norm();
    if (n > 0) m.row(r) /= n;
  }
  return m;
}

void Adam::step(const TensorRefs& params, const ConstTensorRefs& grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("Adam::step: parameter/gradient mismatch");
  }
  if (first_moment_.empty()) {
    for (const Matrix* p : params) {
      first_moment_.push_back(Matrix::Zero(p->rows(), p->cols()));
      second_moment_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (first_moment_.size() != params.size()) {
    throw std::invalid_argument("Adam::step: parameter layout changed");
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = first_moment_[i];
    Matrix& v = second_moment_[i];
    m = options_.beta1 * m + (1.0 - options_.beta1) * *grads[i];
    v = options_.beta2 * v +
        (1.0 - options_.beta2) * grads[i]->cwiseProduct(*grads[i]);
    *params[i] -= (options_.learning_rate *
                   (m / c1).array() /
                   ((v / c2).array().sqrt() + options_.epsilon))
                      .matrix();
  }
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "gd";
}

OptimizerKind parse_optimizer(const std::string& text) {
  if (text == "gd") return OptimizerKind::kGradientDescent;
  if (text == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer '" + text +
                              "' (expected gd or adam)");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate)
    : kind_(kind),
      learning_rate_(learning_rate),
      adam_({.learning_rate = learning_rate}) {}

void Optimizer::step(const TensorRefs& params, const ConstTensorRefs& grads) {
  if (kind_ == OptimizerKind::kAdam) {
    adam_.step(params, grads);
    return;
  }
  if (params.size() != grads.size()) {
    throw std::invalid_argument("Optimizer::step: parameter/gradient mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    *params[i] -= learning_rate_ * *grads[i];
  }
}

}  // namespace gfm4ga
