#include "fcl/knowledge_libraries.hpp"

#include <random>

namespace fcl::knowledge_libraries {

namespace {

// (u u') (x) omega into the dp x dp accumulator layout.
void add_kron(Matrix& acc, const Vector& u, const Matrix& omega, double scale) {
  const Eigen::Index d = omega.rows();
  const Eigen::Index p = u.size();
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      const double coeff = scale * u[i] * u[j];
      if (coeff == 0.0) continue;
      acc.block(i * d, j * d, d, d).noalias() += coeff * omega;
    }
  }
}

}  // namespace

void clip_columns(Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double norm = m.col(j).norm();
    if (norm > 1.0) m.col(j) /= norm;
  }
}

FeatureLibrary init_libraries(int d, int p, std::uint64_t seed) {
  if (p < 1 || d < 1) throw Error("library dimensions must be positive");
  if (p > d) throw Error("code dimension p=" + std::to_string(p) + " exceeds feature dimension d=" +
                         std::to_string(d));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  auto random_unit_columns = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
      const double norm = m.col(j).norm();
      if (norm > 0.0) m.col(j) /= norm;
    }
    return m;
  };
  FeatureLibrary lib;
  lib.decoder = random_unit_columns(d, p);
  lib.encoder = random_unit_columns(p, d);
  const Eigen::Index dp = static_cast<Eigen::Index>(d) * p;
  lib.acc_A = Matrix::Zero(dp, dp);
  lib.acc_b = Vector::Zero(dp);
  lib.acc_M = Matrix::Zero(p, d);
  lib.acc_C = Matrix::Zero(d, d);
  lib.tasks_seen = 0;
  return lib;
}

DecoderContribution decoder_contribution(const Vector& code, const Matrix& omega,
                                         const std::vector<sparse_coder::RepresentativeTerm>& reps,
                                         double lambda2, const Vector& w) {
  const Eigen::Index d = omega.rows();
  const Eigen::Index p = code.size();
  if (w.size() != d || omega.cols() != d) throw Error("dimension mismatch: w/omega in decoder update");
  DecoderContribution out{Matrix::Zero(d * p, d * p), Vector::Zero(d * p)};
  add_kron(out.A, code, omega, 1.0);
  for (const auto& rep : reps) {
    if (rep.code.size() != p || rep.omega.rows() != d)
      throw Error("dimension mismatch: representative in decoder update");
    if (lambda2 == 0.0 || rep.weight == 0.0) continue;
    add_kron(out.A, rep.code - code, rep.omega, lambda2 * rep.weight);
  }
  const Matrix rhs = (omega * w) * code.transpose();
  out.b = Eigen::Map<const Vector>(rhs.data(), d * p);
  return out;
}

FeatureLibrary update_decoder(const FeatureLibrary& lib, const Vector& code, const Matrix& omega,
                              const std::vector<sparse_coder::RepresentativeTerm>& reps, double lambda2,
                              const Vector& w, double ridge_mu) {
  if (code.size() != lib.code_dim()) throw Error("dimension mismatch: code length in decoder update");
  if (lib.tasks_seen < 1) throw Error("decoder update requires tasks_seen >= 1");
  if (ridge_mu < 0.0) throw Error("ridge mu must be non-negative");
  FeatureLibrary next = lib;
  const DecoderContribution delta = decoder_contribution(code, omega, reps, lambda2, w);
  next.acc_A += delta.A;
  next.acc_b += delta.b;

  const double inv_t = 1.0 / static_cast<double>(next.tasks_seen);
  Matrix system = next.acc_A * inv_t;
  system.diagonal().array() += ridge_mu;
  system = 0.5 * (system + system.transpose());
  // dp x dp and solved once per task; the blocked Cholesky is the only
  // expensive step of an arrival.
  Eigen::LLT<Matrix> llt(system);
  const double scale = std::max(system.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().array().square().minCoeff() <= 1e-13 * scale) {
    throw Error("decoder system is singular; use ridge mu > 0");
  }
  const Vector vec_d = llt.solve(next.acc_b * inv_t);
  next.decoder = Eigen::Map<const Matrix>(vec_d.data(), lib.dim(), lib.code_dim());
  clip_columns(next.decoder);
  return next;
}

FeatureLibrary update_encoder(const FeatureLibrary& lib, const Vector& code, const Vector& w,
                              sparse_coder::Activation phi, double ridge_mu) {
  if (code.size() != lib.code_dim() || w.size() != lib.dim())
    throw Error("dimension mismatch: encoder update");
  if (ridge_mu < 0.0) throw Error("ridge mu must be non-negative");
  const Vector target = sparse_coder::inverse_activation(phi, code);
  if (!target.allFinite()) throw Error("inverse activation of the code is not finite");
  FeatureLibrary next = lib;
  next.acc_M += target * w.transpose();
  next.acc_C += w * w.transpose();

  Matrix system = next.acc_C;
  system.diagonal().array() += ridge_mu;
  Eigen::LDLT<Matrix> ldlt(system);
  const double scale = std::max(system.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-13 * scale) {
    throw Error("encoder system C is singular; use ridge mu > 0");
  }
  // L (C + mu I) = M  <=>  (C + mu I) L' = M' since C is symmetric.
  next.encoder = ldlt.solve(next.acc_M.transpose()).transpose();
  clip_columns(next.encoder);
  return next;
}

std::pair<ModelLibrary, bool> admit_representative(const ModelLibrary& mlib, const Vector& code,
                                                   const assignment_solver::Assignment& assignment,
                                                   const std::string& task_id, int t) {
  bool admit = mlib.empty();
  if (!admit) {
    const Eigen::Index last = assignment.z.size() - 1;
    const double outlier = assignment.z[last];
    const double best_rep = last > 0 ? assignment.z.head(last).maxCoeff() : -1.0;
    admit = outlier > best_rep;
  }
  ModelLibrary next = mlib;
  if (admit) next.reps.push_back({code, task_id, t});
  return {std::move(next), admit};
}

}  // namespace fcl::knowledge_libraries
