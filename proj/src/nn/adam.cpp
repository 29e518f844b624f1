#include "eqrn/nn/adam.hpp"

#include <cmath>

#include "eqrn/error.hpp"

namespace eqrn::nn {

Adam::Adam(const ParamBlocks& params, AdamOptions options) : options_(options) {
  for (const auto& block : params) {
    m_.push_back(Vector::Zero(static_cast<Index>(block.size())));
    v_.push_back(Vector::Zero(static_cast<Index>(block.size())));
  }
}

void Adam::step(const ParamBlocks& params, const ParamBlocks& grads, double learning_rate) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw DomainError("Adam::step: parameter block count changed");
  }
  ++t_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Eigen::Map<Vector> p(params[k].data(), static_cast<Index>(params[k].size()));
    Eigen::Map<const Vector> g(grads[k].data(), static_cast<Index>(grads[k].size()));
    if (g.size() != m_[k].size()) throw DomainError("Adam::step: gradient block size mismatch");
    m_[k] = b1 * m_[k] + (1.0 - b1) * g;
    v_[k] = b2 * v_[k] + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= learning_rate * (m_[k].array() / correction1) /
                 ((v_[k].array() / correction2).sqrt() + options_.epsilon);
  }
}

}  // namespace eqrn::nn
