#include "nn.hpp"

#include <cmath>

#include "error.hpp"

namespace domq {

namespace {

void uniform_fill(Tensor& t, Rng& rng, double bound) {
  for (double& x : t.v) x = rng.next_uniform(-bound, bound);
}

double signed_sqrt(double x) { return (x < 0 ? -1.0 : 1.0) * std::sqrt(std::abs(x)); }

}  // namespace

void Linear::init(Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(w.value.cols));
  uniform_fill(w.value, rng, bound);
  b.value.zero();
}

Val Linear::apply(Tape& t, Val x) {
  return add(matmul_nt(x, t.use(w)), t.use(b));
}

void NoisyLinear::init(Rng& rng, double sigma0) {
  int fan_in = mu_w.value.cols;
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  uniform_fill(mu_w.value, rng, bound);
  uniform_fill(mu_b.value, rng, bound);
  double s = sigma0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : sigma_w.value.v) x = s;
  for (double& x : sigma_b.value.v) x = s;
  eps_w.zero();
  eps_b.zero();
}

void NoisyLinear::resample(Rng& rng) {
  int out = mu_w.value.rows, in = mu_w.value.cols;
  std::vector<double> f_in(in), f_out(out);
  for (int i = 0; i < in; ++i) f_in[i] = signed_sqrt(rng.next_normal());
  for (int o = 0; o < out; ++o) f_out[o] = signed_sqrt(rng.next_normal());
  for (int o = 0; o < out; ++o)
    for (int i = 0; i < in; ++i) eps_w.at(o, i) = f_out[o] * f_in[i];
  for (int o = 0; o < out; ++o) eps_b.at(0, o) = f_out[o];
}

Val NoisyLinear::apply(Tape& t, Val x, bool with_noise) {
  if (!with_noise) return add(matmul_nt(x, t.use(mu_w)), t.use(mu_b));
  Val w_eff = add(t.use(mu_w), mul(t.use(sigma_w), t.constant_view(&eps_w)));
  Val b_eff = add(t.use(mu_b), mul(t.use(sigma_b), t.constant_view(&eps_b)));
  return add(matmul_nt(x, w_eff), b_eff);
}

Adam::Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  slots_.reserve(params_.size());
  for (Parameter* p : params_)
    slots_.push_back(Slot{Tensor(p->value.rows, p->value.cols),
                          Tensor(p->value.rows, p->value.cols)});
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.trainable) continue;
    Slot& s = slots_[i];
    for (std::size_t k = 0; k < p.value.v.size(); ++k) {
      double g = p.grad.v[k];
      s.m.v[k] = beta1_ * s.m.v[k] + (1.0 - beta1_) * g;
      s.v.v[k] = beta2_ * s.v.v[k] + (1.0 - beta2_) * g * g;
      double mhat = s.m.v[k] / bc1;
      double vhat = s.v.v[k] / bc2;
      p.value.v[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

}  // namespace domq
