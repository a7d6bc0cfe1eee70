#pragma once

#include <optional>
#include <vector>

#include "fcl/types.hpp"

namespace fcl::sparse_coder {

enum class Activation { identity, tanh };

Vector apply_activation(Activation phi, const Vector& v);
/// Inverse of the activation. For tanh the argument is clamped to
/// +-(1 - 1e-6) so the inverse stays finite on saturated codes.
Vector inverse_activation(Activation phi, const Vector& v);

/// Representative k as seen from the current task: its code, the task's
/// half-Hessian evaluated at D*s_k, and its assignment weight.
struct RepresentativeTerm {
  Vector code;
  Matrix omega;
  double weight = 0.0;
};

struct CodeProblem {
  Vector w;
  Matrix omega;
  Matrix decoder;        // d x p
  Vector encoder_image;  // phi(L w), length p
  std::vector<RepresentativeTerm> reps;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// Throws on shape mismatch, negative regularizers, or weights outside [0,1].
void validate(const CodeProblem& prob);

//   f(s) = ||w - D s||^2_Omega + ||s - phi(Lw)||^2
//          + lambda2 * sum_k z_k ||D s_k - D s||^2_{Omega_k}
double smooth_objective(const CodeProblem& prob, const Vector& s);
/// f(s) + lambda1 ||s||_1
double composite_objective(const CodeProblem& prob, const Vector& s);
Vector smooth_gradient(const CodeProblem& prob, const Vector& s);

/// Elementwise sign(v) * max(|v| - tau, 0).
Vector soft_threshold(const Vector& v, double tau);

struct EncodeOptions {
  double tol = 1e-6;
  int max_iter = 5000;
};

struct EncodeResult {
  Vector code;
  double objective = 0.0;
  int iterations = 0;
  /// Composite objective after every accepted step, starting with the
  /// initial point.
  std::vector<double> trace;
};

/// Accelerated proximal gradient (FISTA with backtracking and function-value
/// restart). Accepted iterates never increase the composite objective.
/// Starts from `init` when given, otherwise from the encoder image.
EncodeResult encode_task(const CodeProblem& prob, const EncodeOptions& options = {},
                         const std::optional<Vector>& init = std::nullopt);

}  // namespace fcl::sparse_coder
