#pragma once

#include <vector>

#include "fcl/types.hpp"

namespace fcl::assignment_solver {

/// Soft assignment of a task over K representatives plus the outlier slot,
/// which is always the last entry.
struct Assignment {
  Vector z;
  int admm_iters = 0;
  double primal_residual = 0.0;

  double outlier_probability() const { return z[z.size() - 1]; }
  Eigen::Index representative_count() const { return z.size() - 1; }
};

struct RepresentativeView {
  Vector code;
  Matrix omega;
};

/// d_k = (D s_k - D s_t)' Omega_k (D s_k - D s_t) for every representative.
Vector representative_distances(const Matrix& decoder, const Vector& code,
                                const std::vector<RepresentativeView>& reps);

/// Returned when every distance is zero: such a task is perfectly explained
/// by the library, so the outlier slot must never win.
inline constexpr double kOutlierWeightCap = 1e6;

/// d0 = -gamma * log(min_k d_k / sum_k d_k), capped at kOutlierWeightCap.
/// Evaluates the formula literally, so a single representative yields 0.
double outlier_weight(const Vector& distances, double gamma);

/// The outlier weight used when learning: identical to outlier_weight except
/// that with one representative (where the ratio is identically 1) it
/// returns gamma * log 2, the value two equidistant representatives give.
double effective_outlier_weight(const Vector& distances, double gamma);

/// Euclidean projection onto {z >= 0, sum z = 1} (sort-and-threshold).
Vector project_simplex(const Vector& v);

struct AdmmOptions {
  double lambda2 = 1.0;
  double alpha = 0.01;
  double beta = 1.0;
  double rho = 1.0;
  int max_iter = 2000;
  double tol = 1e-6;
};

/// lambda2 <c, z> + alpha ||z||_1 with c = [distances, d0].
double assignment_objective(const Vector& distances, double d0, const Vector& z, double lambda2,
                            double alpha);

/// Minimizes assignment_objective over the probability simplex by ADMM on
/// the split z = J (z carries the l1 term, J the linear term and the simplex
/// constraint). Returns the feasible iterate J.
Assignment solve_assignment(const Vector& distances, double d0, const AdmmOptions& options = {});

}  // namespace fcl::assignment_solver
