#pragma once

#include <cstdint>
#include <vector>

#include "uhg/tensor.hpp"

namespace uhg::ad {

struct AdamHyper {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with L2 coupled into the gradient (grad += wd * theta before the
// moment update), one weight-decay value per parameter so dense and
// convolutional groups can decay differently.
class Adam {
 public:
  Adam(std::vector<Tensor> params, std::vector<double> weight_decay,
       AdamHyper hyper = {}, Precision precision = Precision::f64);

  void step();
  void zero_grads();
  std::int64_t steps_taken() const { return t_; }

 private:
  std::vector<Tensor> params_;
  std::vector<double> wd_;
  std::vector<std::vector<double>> m_, v_;
  AdamHyper hp_;
  Precision precision_;
  std::int64_t t_ = 0;
};

}  // namespace uhg::ad
