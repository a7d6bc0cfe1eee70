#include "fcl/checkpoint.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fcl/hyper_json.hpp"

namespace fcl::lifelong_engine {

void to_json(nlohmann::json& j, const HyperParams& hp) {
  j = nlohmann::json{{"lambda1", hp.lambda1},
                     {"lambda2", hp.lambda2},
                     {"alpha", hp.alpha},
                     {"beta", hp.beta},
                     {"rho", hp.rho},
                     {"gamma", hp.gamma},
                     {"mu", hp.mu},
                     {"ridge", hp.ridge},
                     {"p", hp.p},
                     {"phi", hp.phi == sparse_coder::Activation::identity ? "identity" : "tanh"},
                     {"max_outer", hp.max_outer},
                     {"outer_tol", hp.outer_tol},
                     {"encode_tol", hp.encode.tol},
                     {"encode_max_iter", hp.encode.max_iter},
                     {"admm_max_iter", hp.admm_max_iter},
                     {"admm_tol", hp.admm_tol},
                     {"newton_max_iter", hp.newton_max_iter},
                     {"admission", hp.admission},
                     {"seed", hp.seed}};
}

void from_json(const nlohmann::json& j, HyperParams& hp) {
  static const std::set<std::string> known{"lambda1",  "lambda2",         "alpha",         "beta",
                                           "rho",      "gamma",           "mu",            "ridge",
                                           "p",        "phi",             "max_outer",     "outer_tol",
                                           "encode_tol", "encode_max_iter", "admm_max_iter", "admm_tol",
                                           "newton_max_iter", "admission",  "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error("unknown hyperparameter '" + key + "'");
  }
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  read("lambda1", hp.lambda1);
  read("lambda2", hp.lambda2);
  read("alpha", hp.alpha);
  read("beta", hp.beta);
  read("rho", hp.rho);
  read("gamma", hp.gamma);
  read("mu", hp.mu);
  read("ridge", hp.ridge);
  read("p", hp.p);
  if (j.contains("phi")) {
    const auto phi = j.at("phi").get<std::string>();
    if (phi == "identity")
      hp.phi = sparse_coder::Activation::identity;
    else if (phi == "tanh")
      hp.phi = sparse_coder::Activation::tanh;
    else
      throw Error("unknown activation '" + phi + "'");
  }
  read("max_outer", hp.max_outer);
  read("outer_tol", hp.outer_tol);
  read("encode_tol", hp.encode.tol);
  read("encode_max_iter", hp.encode.max_iter);
  read("admm_max_iter", hp.admm_max_iter);
  read("admm_tol", hp.admm_tol);
  read("newton_max_iter", hp.newton_max_iter);
  read("admission", hp.admission);
  read("seed", hp.seed);
}

}  // namespace fcl::lifelong_engine

namespace fcl::checkpoint {

using json = nlohmann::json;
namespace le = lifelong_engine;

namespace {

json matrix_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw Error("checkpoint: matrix size mismatch");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

}  // namespace

std::string to_text(const le::EngineState& state) {
  json j;
  j["format"] = kFormat;
  j["config"] = state.config;
  j["initialized"] = state.initialized;
  j["arrivals"] = state.arrivals;
  const auto& lib = state.flib;
  j["d"] = lib.dim();
  j["p"] = lib.code_dim();
  j["T"] = lib.tasks_seen;
  j["decoder"] = matrix_json(lib.decoder);
  j["encoder"] = matrix_json(lib.encoder);
  j["acc_A"] = matrix_json(lib.acc_A);
  j["acc_b"] = vector_json(lib.acc_b);
  j["acc_M"] = matrix_json(lib.acc_M);
  j["acc_C"] = matrix_json(lib.acc_C);
  j["representatives"] = json::array();
  for (const auto& rep : state.mlib.reps) {
    j["representatives"].push_back(
        {{"code", vector_json(rep.code)}, {"source_task", rep.source_task}, {"admitted_at", rep.admitted_at}});
  }
  j["learn_order"] = state.learn_order;
  j["per_task"] = json::array();
  for (const auto& [id, rec] : state.per_task) {
    j["per_task"].push_back({{"id", id},
                             {"loss", to_string(rec.data.loss_kind)},
                             {"features", matrix_json(rec.data.features)},
                             {"targets", vector_json(rec.data.targets)},
                             {"code", vector_json(rec.code)},
                             {"z", vector_json(rec.assignment.z)},
                             {"admm_iters", rec.assignment.admm_iters},
                             {"primal_residual", rec.assignment.primal_residual},
                             {"w", vector_json(rec.single.w)},
                             {"omega", matrix_json(rec.single.omega)},
                             {"loss_at_w", rec.single.loss_at_w}});
  }
  return j.dump() + "\n";
}

le::EngineState from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw Error("checkpoint: unsupported format");
    le::EngineState state(j.at("config").get<le::HyperParams>());
    state.initialized = j.at("initialized").get<bool>();
    state.arrivals = j.at("arrivals").get<int>();
    auto& lib = state.flib;
    lib.tasks_seen = j.at("T").get<int>();
    lib.decoder = matrix_from(j.at("decoder"));
    lib.encoder = matrix_from(j.at("encoder"));
    lib.acc_A = matrix_from(j.at("acc_A"));
    lib.acc_b = vector_from(j.at("acc_b"));
    lib.acc_M = matrix_from(j.at("acc_M"));
    lib.acc_C = matrix_from(j.at("acc_C"));
    if (lib.decoder.rows() != j.at("d").get<Eigen::Index>() || lib.decoder.cols() != j.at("p").get<Eigen::Index>())
      throw Error("checkpoint: decoder shape disagrees with d/p");
    for (const auto& rep : j.at("representatives")) {
      state.mlib.reps.push_back({vector_from(rep.at("code")), rep.at("source_task").get<std::string>(),
                                 rep.at("admitted_at").get<int>()});
    }
    state.learn_order = j.at("learn_order").get<std::vector<std::string>>();
    for (const auto& entry : j.at("per_task")) {
      le::TaskRecord rec;
      rec.data.task_id = entry.at("id").get<std::string>();
      rec.data.loss_kind = loss_kind_from_string(entry.at("loss").get<std::string>());
      rec.data.features = matrix_from(entry.at("features"));
      rec.data.targets = vector_from(entry.at("targets"));
      rec.code = vector_from(entry.at("code"));
      rec.assignment.z = vector_from(entry.at("z"));
      rec.assignment.admm_iters = entry.at("admm_iters").get<int>();
      rec.assignment.primal_residual = entry.at("primal_residual").get<double>();
      rec.single.w = vector_from(entry.at("w"));
      rec.single.omega = matrix_from(entry.at("omega"));
      rec.single.loss_at_w = entry.at("loss_at_w").get<double>();
      state.per_task.emplace(rec.data.task_id, std::move(rec));
    }
    return state;
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint: missing or invalid field: ") + e.what());
  }
}

void save(const le::EngineState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out << to_text(state);
}

le::EngineState load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str());
}

}  // namespace fcl::checkpoint
