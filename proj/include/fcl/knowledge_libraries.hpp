#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fcl/assignment_solver.hpp"
#include "fcl/sparse_coder.hpp"
#include "fcl/types.hpp"

namespace fcl::knowledge_libraries {

/// Decoder D (d x p), encoder L (p x d) and the running statistics that make
/// their updates closed-form:
///   A = sum_t (s_t s_t') (x) Omega_t + lambda2 sum_k z_k (s_k - s_t)(s_k - s_t)' (x) Omega_k
///   b = sum_t vec(Omega_t w_t s_t')
///   M = sum_t phi^-1(s_t) w_t'          C = sum_t w_t w_t'
/// vec() is column-major, so vec(Omega D s s') = (s s' (x) Omega) vec(D).
struct FeatureLibrary {
  Matrix decoder;
  Matrix encoder;
  Matrix acc_A;
  Vector acc_b;
  Matrix acc_M;
  Matrix acc_C;
  int tasks_seen = 0;

  Eigen::Index dim() const { return decoder.rows(); }
  Eigen::Index code_dim() const { return decoder.cols(); }
};

/// Gaussian entries (std 1/sqrt(d)), every column rescaled to unit norm,
/// accumulators zeroed. Deterministic in `seed`.
FeatureLibrary init_libraries(int d, int p, std::uint64_t seed);

struct DecoderContribution {
  Matrix A;
  Vector b;
};

/// One task's additive contribution to (A, b). `reps` must not include the
/// outlier slot.
DecoderContribution decoder_contribution(const Vector& code, const Matrix& omega,
                                         const std::vector<sparse_coder::RepresentativeTerm>& reps,
                                         double lambda2, const Vector& w);

/// Adds the task's contribution, then solves (A/T + mu I) vec(D) = b/T and
/// rescales decoder columns with norm > 1 onto the unit sphere. T is
/// `tasks_seen`, which the caller advances once per new task before calling.
FeatureLibrary update_decoder(const FeatureLibrary& lib, const Vector& code, const Matrix& omega,
                              const std::vector<sparse_coder::RepresentativeTerm>& reps, double lambda2,
                              const Vector& w, double ridge_mu);

/// M += phi^-1(s) w', C += w w', then L (C + mu I) = M row-wise, followed by
/// the same column clipping as the decoder.
FeatureLibrary update_encoder(const FeatureLibrary& lib, const Vector& code, const Vector& w,
                              sparse_coder::Activation phi, double ridge_mu);

/// Rescales every column whose norm exceeds 1 to unit norm.
void clip_columns(Matrix& m);

struct Representative {
  Vector code;
  std::string source_task;
  int admitted_at = 0;
};

struct ModelLibrary {
  std::vector<Representative> reps;

  std::size_t size() const { return reps.size(); }
  bool empty() const { return reps.empty(); }
};

/// Admits `code` when the library is empty, or when the outlier slot holds
/// the strictly largest assignment weight (ties keep the task out).
std::pair<ModelLibrary, bool> admit_representative(const ModelLibrary& mlib, const Vector& code,
                                                   const assignment_solver::Assignment& assignment,
                                                   const std::string& task_id, int t);

}  // namespace fcl::knowledge_libraries
