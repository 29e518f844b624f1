#pragma once

#include "eqrn/nn/mlp.hpp"

namespace eqrn::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moments; one moment buffer per parameter block.
class Adam {
 public:
  Adam() = default;
  explicit Adam(const ParamBlocks& params, AdamOptions options = {});

  void step(const ParamBlocks& params, const ParamBlocks& grads, double learning_rate);
  long steps() const { return t_; }

 private:
  AdamOptions options_;
  std::vector<Vector> m_;
  std::vector<Vector> v_;
  long t_ = 0;
};

}  // namespace eqrn::nn
