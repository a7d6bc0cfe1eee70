#include "fcl/sparse_coder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fcl::sparse_coder {

namespace {

constexpr double kTanhClamp = 1.0 - 1e-6;

// The smooth part is a quadratic s'Qs - 2 r's + c; encode_task iterates on
// this p x p form instead of re-multiplying d x d metrics every step.
struct Quadratic {
  Matrix q;
  Vector r;
  double c = 0.0;

  double value(const Vector& s) const { return s.dot(q * s) - 2.0 * r.dot(s) + c; }
  Vector gradient(const Vector& s) const { return 2.0 * (q * s - r); }
};

Quadratic build_quadratic(const CodeProblem& prob) {
  const Eigen::Index p = prob.decoder.cols();
  const Matrix& dec = prob.decoder;
  Quadratic quad;
  quad.q = dec.transpose() * prob.omega * dec + Matrix::Identity(p, p);
  quad.r = dec.transpose() * (prob.omega * prob.w) + prob.encoder_image;
  quad.c = quad_form(prob.w, prob.omega) + prob.encoder_image.squaredNorm();
  for (const auto& rep : prob.reps) {
    if (rep.weight == 0.0 || prob.lambda2 == 0.0) continue;
    const double scale = prob.lambda2 * rep.weight;
    const Matrix metric = dec.transpose() * rep.omega * dec;
    quad.q += scale * metric;
    quad.r += scale * (metric * rep.code);
    quad.c += scale * quad_form(rep.code, metric);
  }
  quad.q = 0.5 * (quad.q + quad.q.transpose());
  return quad;
}

[[noreturn]] void report_non_finite(const CodeProblem& prob, const Vector& s) {
  const Vector residual = prob.w - prob.decoder * s;
  if (!std::isfinite(quad_form(residual, prob.omega)))
    throw Error("non-finite objective: reconstruction term ||w - Ds||_Omega");
  if (!std::isfinite((s - prob.encoder_image).squaredNorm()))
    throw Error("non-finite objective: encoder coupling term ||s - phi(Lw)||");
  if (!std::isfinite(s.lpNorm<1>())) throw Error("non-finite objective: l1 term ||s||_1");
  for (std::size_t k = 0; k < prob.reps.size(); ++k) {
    const Vector diff = prob.decoder * (prob.reps[k].code - s);
    if (!std::isfinite(quad_form(diff, prob.reps[k].omega)))
      throw Error("non-finite objective: representative term " + std::to_string(k));
  }
  throw Error("non-finite objective");
}

}  // namespace

Vector apply_activation(Activation phi, const Vector& v) {
  if (phi == Activation::identity) return v;
  return v.array().tanh().matrix();
}

Vector inverse_activation(Activation phi, const Vector& v) {
  if (phi == Activation::identity) return v;
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out[i] = std::atanh(std::clamp(v[i], -kTanhClamp, kTanhClamp));
  return out;
}

void validate(const CodeProblem& prob) {
  const Eigen::Index d = prob.decoder.rows();
  const Eigen::Index p = prob.decoder.cols();
  auto mismatch = [](const std::string& what) { throw Error("dimension mismatch: " + what); };
  if (d == 0 || p == 0) mismatch("empty decoder");
  if (prob.w.size() != d) mismatch("w length vs decoder rows");
  if (prob.omega.rows() != d || prob.omega.cols() != d) mismatch("omega vs decoder rows");
  if (prob.encoder_image.size() != p) mismatch("encoder image vs decoder columns");
  for (const auto& rep : prob.reps) {
    if (rep.code.size() != p) mismatch("representative code vs decoder columns");
    if (rep.omega.rows() != d || rep.omega.cols() != d) mismatch("representative omega vs decoder rows");
    if (!(rep.weight >= 0.0 && rep.weight <= 1.0))
      throw Error("representative weight " + std::to_string(rep.weight) + " outside [0,1]");
  }
  if (!(prob.lambda1 >= 0.0) || !(prob.lambda2 >= 0.0))
    throw Error("lambda1 and lambda2 must be non-negative");
}

double smooth_objective(const CodeProblem& prob, const Vector& s) {
  if (s.size() != prob.decoder.cols()) throw Error("dimension mismatch: code length");
  const Vector residual = prob.w - prob.decoder * s;
  double value = quad_form(residual, prob.omega) + (s - prob.encoder_image).squaredNorm();
  for (const auto& rep : prob.reps) {
    const Vector diff = prob.decoder * (rep.code - s);
    value += prob.lambda2 * rep.weight * quad_form(diff, rep.omega);
  }
  return value;
}

double composite_objective(const CodeProblem& prob, const Vector& s) {
  return smooth_objective(prob, s) + prob.lambda1 * s.lpNorm<1>();
}

Vector smooth_gradient(const CodeProblem& prob, const Vector& s) {
  if (s.size() != prob.decoder.cols()) throw Error("dimension mismatch: code length");
  if (prob.w.size() != prob.decoder.rows()) throw Error("dimension mismatch: w length");
  const Matrix& dec = prob.decoder;
  const Vector ds = dec * s;
  Vector grad = 2.0 * dec.transpose() * (prob.omega * (ds - prob.w)) + 2.0 * (s - prob.encoder_image);
  for (const auto& rep : prob.reps) {
    grad += 2.0 * prob.lambda2 * rep.weight * dec.transpose() * (rep.omega * (ds - dec * rep.code));
  }
  return grad;
}

Vector soft_threshold(const Vector& v, double tau) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]) - tau;
    out[i] = mag > 0.0 ? std::copysign(mag, v[i]) : 0.0;
  }
  return out;
}

EncodeResult encode_task(const CodeProblem& prob, const EncodeOptions& options,
                         const std::optional<Vector>& init) {
  validate(prob);
  const Quadratic quad = build_quadratic(prob);
  const double lambda1 = prob.lambda1;
  auto composite = [&](const Vector& s) { return quad.value(s) + lambda1 * s.lpNorm<1>(); };

  Vector x = init ? *init : prob.encoder_image;
  if (x.size() != prob.decoder.cols()) throw Error("dimension mismatch: initial code length");
  double fx = composite(x);
  if (!std::isfinite(fx)) report_non_finite(prob, x);

  EncodeResult result;
  result.trace.push_back(fx);

  Vector y = x;
  double momentum = 1.0;
  double lipschitz = 1.0;
  int iter = 0;
  bool restarted = false;
  for (; iter < options.max_iter; ++iter) {
    const Vector grad = quad.gradient(y);
    const double fy = quad.value(y);
    Vector z;
    // Backtracking: grow the local Lipschitz estimate until the quadratic
    // upper bound holds at the proximal point.
    for (;;) {
      z = soft_threshold(y - grad / lipschitz, lambda1 / lipschitz);
      const Vector step = z - y;
      const double bound = fy + grad.dot(step) + 0.5 * lipschitz * step.squaredNorm();
      const double fz_smooth = quad.value(z);
      if (!std::isfinite(fz_smooth)) report_non_finite(prob, z);
      if (fz_smooth <= bound + 1e-14 * std::max(1.0, std::abs(bound))) break;
      lipschitz *= 2.0;
      if (lipschitz > 1e300) throw Error("line search failed: step size underflow");
    }
    const double fz = composite(z);
    if (fz > fx) {
      // A plain proximal step from x that still fails to descend means we
      // are at round-off level.
      if (restarted) {
        ++iter;
        break;
      }
      // Restart from the last accepted point; the next step is a plain
      // proximal step, which cannot increase the objective.
      restarted = true;
      y = x;
      momentum = 1.0;
      continue;
    }
    restarted = false;
    const Vector y_prev = y;
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = z + ((momentum - 1.0) / next_momentum) * (z - x);
    momentum = next_momentum;
    const double change = fx - fz;
    x = z;
    fx = fz;
    result.trace.push_back(fx);
    if (change <= options.tol * std::abs(fx) + std::numeric_limits<double>::min()) {
      // One short step proves little. grad(z) - grad(y) + L (y - z) is a
      // subgradient of the objective at z, and the smooth part is
      // 2-strongly convex, so |g|^2 / 4 bounds the remaining gap.
      const Vector g = quad.gradient(z) - grad + lipschitz * (y_prev - z);
      if (g.squaredNorm() / 4.0 <= options.tol * std::max(1.0, std::abs(fx))) {
        ++iter;
        break;
      }
    }
  }
  result.code = x;
  result.objective = fx;
  result.iterations = iter;
  return result;
}

}  // namespace fcl::sparse_coder
