#include "gfm4ga/mlp.h"

#include <cmath>
#include <stdexcept>

namespace gfm4ga {

TwoLayerHead TwoLayerHead::zeros(int input_dim, int hidden_dim) {
  TwoLayerHead h;
  h.w1 = Matrix::Zero(hidden_dim, input_dim);
  h.b1 = Matrix::Zero(hidden_dim, 1);
  h.w2 = Matrix::Zero(1, hidden_dim);
  h.b2 = Matrix::Zero(1, 1);
  return h;
}

TwoLayerHead TwoLayerHead::gaussian(int input_dim, int hidden_dim, Rng& rng) {
  TwoLayerHead h = zeros(input_dim, hidden_dim);
  h.w1 = row_normalized_gaussian(hidden_dim, input_dim,
                                 1.0 / std::sqrt(double(input_dim)), rng);
  h.w2 = row_normalized_gaussian(1, hidden_dim,
                                 1.0 / std::sqrt(double(hidden_dim)), rng);
  return h;
}

Vector TwoLayerHead::forward(const Matrix& inputs, Cache* cache) const {
  if (inputs.cols() != w1.cols()) {
    throw std::invalid_argument(
        "TwoLayerHead: input dimension " + std::to_string(inputs.cols()) +
        ", expected " + std::to_string(w1.cols()));
  }
  Matrix hidden = inputs * w1.transpose();
  hidden.rowwise() += b1.col(0).transpose();
  hidden = hidden.array().tanh().matrix();
  Vector logits = hidden * w2.row(0).transpose();
  Vector out(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    out(i) = sigmoid(logits(i) + b2(0, 0));
  }
  if (cache) {
    cache->inputs = inputs;
    cache->hidden = std::move(hidden);
    cache->outputs = out;
  }
  return out;
}

void TwoLayerHead::backward(const Cache& cache, const Vector& grad_outputs,
                            TwoLayerHead& grads, Matrix* grad_inputs) const {
  const Vector dlogit =
      grad_outputs.cwiseProduct(cache.outputs)
          .cwiseProduct((1.0 - cache.outputs.array()).matrix());
  grads.w2.row(0) += dlogit.transpose() * cache.hidden;
  grads.b2(0, 0) += dlogit.sum();
  Matrix dhidden = dlogit * w2.row(0);
  dhidden.array() *= 1.0 - cache.hidden.array().square();
  grads.w1 += dhidden.transpose() * cache.inputs;
  grads.b1.col(0) += dhidden.colwise().sum().transpose();
  if (grad_inputs) *grad_inputs = dhidden * w1;
}

}  // namespace gfm4ga
