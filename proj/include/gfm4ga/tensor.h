#ifndef GFM4GA_TENSOR_H_
#define GFM4GA_TENSOR_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gfm4ga {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Rng = std::mt19937_64;

// Parameter sets expose their trainable tensors as an ordered list of
// pointers. The order is the serialization order.
using TensorRefs = std::vector<Matrix*>;
using ConstTensorRefs = std::vector<const Matrix*>;

// Deterministic generator for stream `stream` of a run seeded by `seed`.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

double squared_norm(const ConstTensorRefs& tensors);
// Euclidean norm of the flattened difference a - b.
double distance(const ConstTensorRefs& a, const ConstTensorRefs& b);
std::size_t total_size(const ConstTensorRefs& tensors);
std::vector<double> flatten(const ConstTensorRefs& tensors);
void unflatten(std::span<const double> values, const TensorRefs& tensors);
void set_zero(const TensorRefs& tensors);
// dst += scale * src, tensor by tensor.
void add_scaled(const TensorRefs& dst, const ConstTensorRefs& src,
                double scale);
// Rescales so the global norm is at most `max_norm`. Returns the norm before
// clipping.
double clip_global_norm(const TensorRefs& grads, double max_norm);

inline double sigmoid(double x) {
  if (x >= 0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Log of sum of exponentials, stable for large arguments. Empty input gives
// -infinity.
double log_sum_exp(std::span<const double> values);

// Gaussian init with the given std, then every row scaled to unit length.
Matrix row_normalized_gaussian(int rows, int cols, double stddev, Rng& rng);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Fixed-step Adam. State is keyed by tensor position, so every call must pass
// the same parameter layout.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(const TensorRefs& params, const ConstTensorRefs& grads);

 private:
  AdamOptions options_;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
  std::int64_t steps_ = 0;
};

enum class OptimizerKind { kGradientDescent, kAdam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& text);

// Fixed learning rate; either plain gradient descent or Adam.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);

  void step(const TensorRefs& params, const ConstTensorRefs& grads);

 private:
  OptimizerKind kind_;
  double learning_rate_;
  Adam adam_;
};

}  // namespace gfm4ga

#endif  // GFM4GA_TENSOR_H_
