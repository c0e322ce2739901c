#pragma once

#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace domq {

struct Linear {
  Parameter w;  // out x in
  Parameter b;  // 1 x out
  Linear() = default;
  Linear(const std::string& name, int in, int out)
      : w(name + ".w", out, in), b(name + ".b", 1, out) {}

  void init(Rng& rng);
  Val apply(Tape& t, Val x);
  std::vector<Parameter*> params() { return {&w, &b}; }
};

// Linear layer with learnable factorized Gaussian noise:
//   y = (mu_w + sigma_w . eps_w) x + (mu_b + sigma_b . eps_b)
// eps stays fixed between resample calls; apply(..., false) uses mu only.
struct NoisyLinear {
  Parameter mu_w, sigma_w;  // out x in
  Parameter mu_b, sigma_b;  // 1 x out
  Tensor eps_w, eps_b;

  NoisyLinear() = default;
  NoisyLinear(const std::string& name, int in, int out)
      : mu_w(name + ".mu_w", out, in),
        sigma_w(name + ".sigma_w", out, in),
        mu_b(name + ".mu_b", 1, out),
        sigma_b(name + ".sigma_b", 1, out),
        eps_w(out, in),
        eps_b(1, out) {}

  void init(Rng& rng, double sigma0);
  void resample(Rng& rng);
  Val apply(Tape& t, Val x, bool with_noise);
  std::vector<Parameter*> params() { return {&mu_w, &sigma_w, &mu_b, &sigma_b}; }
};

// Adam with bias correction over a fixed parameter list. Moment buffers
// start at zero; update order follows the list, so steps are
// deterministic given identical gradients.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();
  void set_lr(double lr) { lr_ = lr; }
  long long steps_taken() const { return t_; }

 private:
  struct Slot {
    Tensor m, v;
  };
  std::vector<Parameter*> params_;
  std::vector<Slot> slots_;
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
};

}  // namespace domq
