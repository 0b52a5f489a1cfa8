#include "focuse/focuse_layer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "focuse/errors.hpp"

namespace focuse {

double softplus(double f) noexcept {
  if (f > kSoftplusThreshold) return f + std::log1p(std::exp(-f));
  return std::log1p(std::exp(f));
}

double sigmoid(double f) noexcept {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

double alpha(double w, double beta, Polarity polarity) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw ValidationError("weight must lie in [0, 1], got " + std::to_string(w));
  }
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ValidationError("beta must lie in [0, 1], got " + std::to_string(beta));
  }
  // The positive factor beta + (1 - w)(1 - beta) is taken as the complement
  // (1 + beta) - alpha_neg, which keeps alpha_pos + alpha_neg == 1 + beta
  // exact in floating point.
  const double negative = beta + w * (1.0 - beta);
  return polarity == Polarity::kNegative ? negative : (1.0 + beta) - negative;
}

double focuse_score(double f, double w, double beta, Polarity polarity) {
  return alpha(w, beta, polarity) * softplus(f);
}

double structural_beta(std::uint32_t epoch, std::uint32_t lambda, double constant_beta) {
  if (lambda == 0) return constant_beta;
  return std::max(0.0, 1.0 - static_cast<double>(epoch) / static_cast<double>(lambda));
}

}  // namespace focuse
