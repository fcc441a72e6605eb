#include "deepssm/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "deepssm/errors.hpp"

namespace deepssm {
namespace {

using json = nlohmann::json;

json matrix_to_json(const Matrix<double>& m) {
  json data = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix<double> matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw ValidationError(where + ": expected an object with rows, cols and data");
  }
  const auto rows = j.at("rows").get<long long>();
  const auto cols = j.at("cols").get<long long>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() ||
      data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ValidationError(where + ": data length does not match rows x cols");
  }
  Matrix<double> m(rows, cols);
  std::size_t n = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index jj = 0; jj < cols; ++jj) m(i, jj) = data[n++].get<double>();
  return m;
}

json stack_to_json(const FactorStack<double>& stack) {
  json factors = json::array();
  for (const auto& f : stack.factors) factors.push_back(matrix_to_json(f));
  return factors;
}

FactorStack<double> stack_from_json(const json& j, Operator role, const std::string& key) {
  if (!j.is_array()) throw ValidationError(key + ": expected an array of matrices");
  FactorStack<double> stack{role, {}};
  for (std::size_t i = 0; i < j.size(); ++i) {
    stack.factors.push_back(matrix_from_json(j[i], key + "[" + std::to_string(i) + "]"));
  }
  return stack;
}

json config_to_json(const ModelConfig& c) {
  return {{"n_z", c.n_z},           {"n_x", c.n_x},
          {"n_y", c.n_y},           {"layers", c.layers},
          {"window", c.window},     {"em_iters", c.em_iters},
          {"sigma_q", c.sigma_q},   {"sigma_r", c.sigma_r},
          {"sigma_p", c.sigma_p},   {"init_scale", c.init_scale},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.n_z = j.at("n_z").get<Index>();
  c.n_x = j.at("n_x").get<Index>();
  c.n_y = j.at("n_y").get<Index>();
  c.layers = j.at("layers").get<int>();
  c.window = j.at("window").get<Index>();
  c.em_iters = j.at("em_iters").get<int>();
  c.sigma_q = j.at("sigma_q").get<double>();
  c.sigma_r = j.at("sigma_r").get<double>();
  c.sigma_p = j.at("sigma_p").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string checkpoint_to_string(const ModelParameters<double>& params, const ModelConfig& config) {
  json doc;
  doc["format"] = "deepssm-checkpoint/1";
  doc["config"] = config_to_json(config);
  doc["state_stack"] = stack_to_json(params.state_stack);
  doc["control_stack"] = stack_to_json(params.control_stack);
  doc["obs_stack"] = stack_to_json(params.obs_stack);
  json z0 = json::array();
  for (Index i = 0; i < params.z0_mean.size(); ++i) z0.push_back(params.z0_mean(i));
  doc["noise"] = {{"q_cov", matrix_to_json(params.q_cov)},
                  {"r_cov", matrix_to_json(params.r_cov)},
                  {"p0_cov", matrix_to_json(params.p0_cov)},
                  {"z0_mean", std::move(z0)}};
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.byte, e.what());
  }
  try {
    for (const char* key : {"config", "state_stack", "control_stack", "obs_stack", "noise"}) {
      if (!doc.contains(key)) throw ValidationError(std::string("missing key '") + key + "'");
    }
    Checkpoint ck;
    ck.config = config_from_json(doc.at("config"));
    try {
      ck.config.validate();
    } catch (const ConfigError& e) {
      throw ValidationError(e.what());
    }
    auto& p = ck.params;
    p.layers = ck.config.layers;
    p.state_stack = stack_from_json(doc.at("state_stack"), Operator::State, "state_stack");
    p.control_stack = stack_from_json(doc.at("control_stack"), Operator::Control, "control_stack");
    p.obs_stack = stack_from_json(doc.at("obs_stack"), Operator::Observation, "obs_stack");
    const auto& noise = doc.at("noise");
    p.q_cov = matrix_from_json(noise.at("q_cov"), "noise.q_cov");
    p.r_cov = matrix_from_json(noise.at("r_cov"), "noise.r_cov");
    p.p0_cov = matrix_from_json(noise.at("p0_cov"), "noise.p0_cov");
    const auto& z0 = noise.at("z0_mean");
    if (!z0.is_array()) throw ValidationError("noise.z0_mean: expected an array");
    p.z0_mean.resize(static_cast<Index>(z0.size()));
    for (std::size_t i = 0; i < z0.size(); ++i) p.z0_mean(static_cast<Index>(i)) = z0[i].get<double>();
    validate_parameters(p, ck.config);
    return ck;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ModelParameters<double>& params, const ModelConfig& config,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << checkpoint_to_string(params, config);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace deepssm
