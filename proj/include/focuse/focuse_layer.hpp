#pragma once
// The FocusE layer sits between the scoring function and the loss:
//
//   h(t) = alpha(w, beta, polarity) * softplus(f(t))
//
// where w is always the weight of the positive triple, and beta (structural
// influence) decays linearly from 1 to 0 over `lambda` epochs.

#include <cstdint>

namespace focuse {

enum class Polarity { kPositive, kNegative };

struct FocusEParams {
  double beta = 1.0;
  std::uint32_t lambda = 0;
};

// Above this, ln(1 + e^f) == f to double precision.
inline constexpr double kSoftplusThreshold = 34.0;

// ln(1 + e^f) without overflow or underflow traps. Always >= 0.
double softplus(double f) noexcept;

// d softplus / df = 1 / (1 + e^-f), evaluated stably.
double sigmoid(double f) noexcept;

// beta + (1 - w)(1 - beta) for positives, beta + w(1 - beta) for negatives.
// Throws ValidationError when w or beta fall outside [0, 1].
double alpha(double w, double beta, Polarity polarity);

// alpha(w, beta, polarity) * softplus(f).
double focuse_score(double f, double w, double beta, Polarity polarity);

// max(0, 1 - epoch / lambda). lambda == 0 means no decay: the caller-supplied
// constant beta is returned for every epoch.
double structural_beta(std::uint32_t epoch, std::uint32_t lambda, double constant_beta = 1.0);

}  // namespace focuse
