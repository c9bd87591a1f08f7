#ifndef GFM4GA_MLP_H_
#define GFM4GA_MLP_H_

#include "gfm4ga/tensor.h"

namespace gfm4ga {

// Two affine layers with a tanh hidden activation and a sigmoid scalar head:
//   y = sigmoid(w2 . tanh(W1 x + b1) + b2)
// Used by the node anomaly scorer and by the edge deviation network.
struct TwoLayerHead {
  Matrix w1;  // hidden x in
  Matrix b1;  // hidden x 1
  Matrix w2;  // 1 x hidden
  Matrix b2;  // 1 x 1

  static TwoLayerHead zeros(int input_dim, int hidden_dim);
  // Gaussian weights with std 1/sqrt(fan_in), each row normalized; zero bias.
  static TwoLayerHead gaussian(int input_dim, int hidden_dim, Rng& rng);

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }

  struct Cache {
    Matrix inputs;   // batch x in
    Matrix hidden;   // batch x hidden, after tanh
    Vector outputs;  // batch, after sigmoid
  };

  // One output per input row.
  Vector forward(const Matrix& inputs, Cache* cache = nullptr) const;

  // Accumulates parameter gradients into `grads` and, when requested, writes
  // the gradient with respect to the inputs.
  void backward(const Cache& cache, const Vector& grad_outputs,
                TwoLayerHead& grads, Matrix* grad_inputs = nullptr) const;

  TensorRefs tensors() { return {&w1, &b1, &w2, &b2}; }
  ConstTensorRefs tensors() const { return {&w1, &b1, &w2, &b2}; }

  friend bool operator==(const TwoLayerHead&, const TwoLayerHead&) = default;
};

}  // namespace gfm4ga

#endif  // GFM4GA_MLP_H_
