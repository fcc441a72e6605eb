#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "deepssm/checkpoint.hpp"
#include "deepssm/model.hpp"
#include "support.hpp"

using namespace deepssm;

namespace {

ModelConfig defaults() { return ModelConfig{}; }

std::string field_of(const ModelConfig& c) {
  try {
    c.validate();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  CHECK(field_of(defaults()).empty());
  auto c = defaults();
  c.n_z = 0;
  CHECK(field_of(c) == "n_z");
  c = defaults();
  c.n_y = 0;
  CHECK(field_of(c) == "n_y");
  c = defaults();
  c.layers = 4;
  CHECK(field_of(c) == "layers");
  c.layers = 0;
  CHECK(field_of(c) == "layers");
  c = defaults();
  c.window = 1;
  CHECK(field_of(c) == "window");
  c = defaults();
  c.em_iters = 0;
  CHECK(field_of(c) == "em_iters");
  c = defaults();
  c.sigma_q = 0;
  CHECK(field_of(c) == "sigma_q");
  c = defaults();
  c.sigma_r = -1;
  CHECK(field_of(c) == "sigma_r");
  c = defaults();
  c.sigma_p = 0;
  CHECK(field_of(c) == "sigma_p");
  c = defaults();
  c.init_scale = 0;
  CHECK(field_of(c) == "init_scale");
  CHECK_THROWS_AS(init_parameters<double>(c), ConfigError);
}

TEST_CASE("default initialization draws every factor from [0, 0.1]") {
  const auto p = init_parameters<double>(defaults());
  CHECK(p.layers == 3);
  for (auto op : {Operator::State, Operator::Control, Operator::Observation}) {
    REQUIRE(p.stack(op).factors.size() == 3);
    for (const auto& f : p.stack(op).factors) {
      CHECK(f.minCoeff() >= 0);
      CHECK(f.maxCoeff() <= 0.1);
    }
  }
  CHECK(p.transition().rows() == 5);
  CHECK(p.control_gain().cols() == 1);
  CHECK(p.emission().rows() == 5);
  CHECK(p.q_cov.isApprox(1e-10 * Matrix<double>::Identity(5, 5)));
  CHECK(p.r_cov.isApprox(1e-2 * Matrix<double>::Identity(5, 5)));
  CHECK(p.p0_cov.isApprox(1e-2 * Matrix<double>::Identity(5, 5)));
  CHECK(p.z0_mean.isZero());
  CHECK_NOTHROW(validate_parameters(p, defaults()));
}

TEST_CASE("single-layer initialization pins the trailing factors to identity") {
  auto c = defaults();
  c.layers = 1;
  const auto p = init_parameters<double>(c);
  for (auto op : {Operator::State, Operator::Control, Operator::Observation}) {
    const auto& f = p.stack(op).factors;
    CHECK(f[1].isIdentity());
    CHECK(f[2].isIdentity());
    CHECK_FALSE(f[0].isIdentity());
  }
  CHECK(p.control_stack.factors[2].rows() == 5);
  CHECK(p.control_stack.factors[2].cols() == 1);
  CHECK(p.control_gain() == p.control_stack.factors[0].leftCols(1));
}

TEST_CASE("initialization is deterministic in the seed") {
  auto c = defaults();
  CHECK(init_parameters<double>(c) == init_parameters<double>(c));
  auto c2 = c;
  c2.seed = 1;
  CHECK_FALSE(init_parameters<double>(c) == init_parameters<double>(c2));
}

TEST_CASE("compose") {
  Matrix<double> a(2, 2), b(2, 2), expected(2, 2);
  a << 1, 2, 0, 1;
  b << 1, 0, 3, 1;
  expected << 7, 2, 3, 1;
  const std::vector<Matrix<double>> ab{a, b};
  CHECK(compose<double>(ab) == expected);
  const std::vector<Matrix<double>> single{a};
  CHECK(compose<double>(single) == a);
  const std::vector<Matrix<double>> ids(3, Matrix<double>::Identity(4, 4));
  CHECK(compose<double>(ids).isIdentity());
  const std::vector<Matrix<double>> bad{a, Matrix<double>::Ones(3, 1)};
  CHECK_THROWS_AS(compose<double>(bad), DimensionError);
  CHECK_THROWS_AS(compose<double>(std::vector<Matrix<double>>{}), DimensionError);
}

TEST_CASE("compose is associative to machine precision") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = testing_support::random_matrix(3, 4, rng, 0, 1);
    const auto b = testing_support::random_matrix(4, 4, rng, 0, 1);
    const auto c = testing_support::random_matrix(4, 2, rng, 0, 1);
    const std::vector<Matrix<double>> abc{a, b, c};
    const std::vector<Matrix<double>> ab{a, b};
    const std::vector<Matrix<double>> ab_c{compose<double>(ab), c};
    CHECK((compose<double>(abc) - compose<double>(ab_c)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("parameter validation") {
  const auto c = defaults();
  auto p = init_parameters<double>(c);
  p.obs_stack.factors[1](0, 0) = -1e-3;
  CHECK_THROWS_AS(validate_parameters(p, c), ValidationError);
  p = init_parameters<double>(c);
  p.state_stack.factors[2] = Matrix<double>::Zero(4, 5);
  CHECK_THROWS_AS(validate_parameters(p, c), ValidationError);
  p = init_parameters<double>(c);
  p.q_cov(0, 0) = 0;
  CHECK_THROWS_AS(validate_parameters(p, c), ValidationError);
  p = init_parameters<double>(c);
  p.z0_mean(0) = std::nan("");
  CHECK_THROWS_AS(validate_parameters(p, c), ValidationError);
}

TEST_CASE("checkpoint round trip is exact") {
  auto c = defaults();
  c.seed = 42;
  c.layers = 2;
  auto p = init_parameters<double>(c);
  p.z0_mean(2) = 1.0 / 3.0;
  p.q_cov(0, 0) = 0.1 + 0.2;
  const auto text = checkpoint_to_string(p, c);
  const auto ck = checkpoint_from_string(text);
  CHECK(ck.params == p);
  CHECK(ck.config == c);

  const auto path = std::filesystem::temp_directory_path() / "deepssm_roundtrip.json";
  save_checkpoint(p, c, path);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.params == p);
  CHECK(loaded.config == c);
  std::filesystem::remove(path);
}

TEST_CASE("malformed checkpoints") {
  const auto c = defaults();
  const auto good = checkpoint_to_string(init_parameters<double>(c), c);

  try {
    checkpoint_from_string(good.substr(0, 40));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() > 0);
    CHECK(e.byte_offset() <= 41);
  }

  auto negative = init_parameters<double>(c);
  negative.control_stack.factors[0](1, 0) = -0.5;
  CHECK_THROWS_AS(checkpoint_from_string(checkpoint_to_string(negative, c)), ValidationError);

  auto mismatched = c;
  mismatched.n_z = 4;
  CHECK_THROWS_AS(checkpoint_from_string(checkpoint_to_string(init_parameters<double>(c), mismatched)),
                  ValidationError);

  auto missing = nlohmann::json::parse(good);
  missing.erase("noise");
  CHECK_THROWS_AS(checkpoint_from_string(missing.dump()), ValidationError);

  auto wrong_type = nlohmann::json::parse(good);
  wrong_type["config"]["layers"] = "three";
  CHECK_THROWS_AS(checkpoint_from_string(wrong_type.dump()), ValidationError);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/ck.json"), DataError);
}
