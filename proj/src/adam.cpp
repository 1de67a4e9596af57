#include "uhg/adam.hpp"

#include <cmath>

namespace uhg::ad {

Adam::Adam(std::vector<Tensor> params, std::vector<double> weight_decay,
           AdamHyper hyper, Precision precision)
    : params_(std::move(params)),
      wd_(std::move(weight_decay)),
      hp_(hyper),
      precision_(precision) {
  require(params_.size() == wd_.size(), ErrorCode::invalid_argument,
          "one weight-decay value per parameter expected");
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t p = 0; p < params_.size(); ++p) {
    m_[p].assign(params_[p].values().size(), 0.0);
    v_[p].assign(params_[p].values().size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(hp_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(hp_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params_.size(); ++p) {
    auto& theta = params_[p].values();
    const auto& grad = params_[p].grad();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i] + wd_[p] * theta[i];
      m_[p][i] = hp_.beta1 * m_[p][i] + (1.0 - hp_.beta1) * g;
      v_[p][i] = hp_.beta2 * v_[p][i] + (1.0 - hp_.beta2) * g * g;
      const double mhat = m_[p][i] / bc1;
      const double vhat = v_[p][i] / bc2;
      theta[i] -= hp_.lr * mhat / (std::sqrt(vhat) + hp_.eps);
    }
    if (precision_ == Precision::f32) params_[p].round_to_f32();
  }
}

void Adam::zero_grads() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace uhg::ad
