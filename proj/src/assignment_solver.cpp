#include "fcl/assignment_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "fcl/sparse_coder.hpp"

namespace fcl::assignment_solver {

Vector representative_distances(const Matrix& decoder, const Vector& code,
                                const std::vector<RepresentativeView>& reps) {
  if (code.size() != decoder.cols()) throw Error("dimension mismatch: code length vs decoder columns");
  const Vector recon = decoder * code;
  Vector dist(static_cast<Eigen::Index>(reps.size()));
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto& rep = reps[k];
    if (rep.code.size() != decoder.cols())
      throw Error("dimension mismatch: representative " + std::to_string(k) + " code length");
    if (rep.omega.rows() != decoder.rows() || rep.omega.cols() != decoder.rows())
      throw Error("dimension mismatch: representative " + std::to_string(k) + " omega");
    const Vector diff = decoder * rep.code - recon;
    // Clamp tiny negative round-off from a PSD form.
    dist[static_cast<Eigen::Index>(k)] = std::max(0.0, quad_form(diff, rep.omega));
  }
  return dist;
}

double outlier_weight(const Vector& distances, double gamma) {
  if (distances.size() == 0) throw Error("outlier weight needs at least one representative");
  if (!(gamma > 0.0)) throw Error("gamma must be positive");
  if (!distances.allFinite()) throw Error("non-finite representative distance");
  if (distances.minCoeff() < 0.0) throw Error("negative representative distance");
  const double total = distances.sum();
  if (total == 0.0) return kOutlierWeightCap;
  const double nearest = distances.minCoeff();
  if (nearest == 0.0) return kOutlierWeightCap;
  const double d0 = -gamma * std::log(nearest / total);
  return std::clamp(d0, 0.0, kOutlierWeightCap);
}

double effective_outlier_weight(const Vector& distances, double gamma) {
  const double d0 = outlier_weight(distances, gamma);
  if (distances.size() == 1 && d0 != kOutlierWeightCap) return gamma * std::log(2.0);
  return d0;
}

Vector project_simplex(const Vector& v) {
  const Eigen::Index n = v.size();
  if (n == 0) throw Error("cannot project an empty vector onto the simplex");
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += sorted[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

double assignment_objective(const Vector& distances, double d0, const Vector& z, double lambda2,
                            double alpha) {
  if (z.size() != distances.size() + 1) throw Error("dimension mismatch: assignment length");
  const double linear = distances.dot(z.head(distances.size())) + d0 * z[z.size() - 1];
  return lambda2 * linear + alpha * z.lpNorm<1>();
}

Assignment solve_assignment(const Vector& distances, double d0, const AdmmOptions& options) {
  if (!(options.lambda2 > 0.0) || !(options.beta > 0.0) || !(options.rho > 0.0))
    throw Error("lambda2, beta and rho must be positive");
  if (!(options.alpha >= 0.0)) throw Error("alpha must be non-negative");
  if (!distances.allFinite() || !std::isfinite(d0)) throw Error("non-finite assignment cost");

  const Eigen::Index n = distances.size() + 1;
  Vector cost(n);
  cost << distances, d0;
  const Vector scaled_cost = options.lambda2 * cost;

  Vector J = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector z = J;
  Vector U = Vector::Zero(n);
  Assignment out;
  double residual = 0.0;
  int iter = 0;
  while (iter < options.max_iter) {
    ++iter;
    const Vector previous = J;
    z = sparse_coder::soft_threshold(J - U / options.beta, options.alpha / options.beta);
    J = project_simplex(z + (U - scaled_cost) / options.beta);
    U += options.rho * (z - J);
    residual = (z - J).norm();
    // z can coincide with J long before J stops moving, so the dual
    // residual has to be small as well.
    const double dual = options.beta * (J - previous).norm();
    if (residual <= options.tol && dual <= options.tol) break;
  }
  if (residual > options.tol && residual > 1e-3) {
    std::ostringstream msg;
    msg << "assignment ADMM stalled: primal residual " << residual << " after " << iter
        << " iterations (check beta/rho)";
    throw Error(msg.str());
  }
  out.z = J;
  out.admm_iters = iter;
  out.primal_residual = residual;
  return out;
}

}  // namespace fcl::assignment_solver
