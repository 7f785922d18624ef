#include "rdnn/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "rdnn/errors.hpp"
#include "rdnn/io.hpp"

namespace rdnn {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) fail(Errc::ShapeMismatch, "matrix json");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) {
      fail(Errc::ShapeMismatch, "ragged matrix json");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

const char* mode_name(PolicyMode mode) {
  return mode == PolicyMode::WeightHead ? "weights" : "shares";
}

PolicyMode mode_from_name(const std::string& name) {
  if (name == "weights") return PolicyMode::WeightHead;
  if (name == "shares") return PolicyMode::ShareHead;
  fail(Errc::ConfigError, "unknown policy mode '" + name + "'");
}

const char* activation_name(OutputActivation act) {
  return act == OutputActivation::SigmoidNormalized ? "sigmoid_normalized"
                                                    : "softmax";
}

OutputActivation activation_from_name(const std::string& name) {
  if (name == "sigmoid_normalized") return OutputActivation::SigmoidNormalized;
  if (name == "softmax") return OutputActivation::Softmax;
  fail(Errc::ConfigError, "unknown output activation '" + name + "'");
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  ckpt.params.validate();
  json j;
  j["schema_version"] = 1;
  j["mode"] = mode_name(ckpt.policy.mode);
  j["output_activation"] = activation_name(ckpt.policy.output_activation);
  j["seed"] = ckpt.policy.seed;
  j["dropout_rate"] = ckpt.policy.dropout_rate;
  j["max_shares"] = ckpt.policy.max_shares;
  j["hidden_sizes"] = ckpt.policy.hidden_sizes;
  j["dims"] = {{"feature_dim", ckpt.feature_dim},
               {"num_assets", ckpt.num_assets},
               {"hidden1", ckpt.params.hidden1()},
               {"hidden2", ckpt.params.hidden2()},
               {"output", ckpt.params.output_dim()}};
  j["layers"] = {
      {"layer1",
       {{"a", matrix_to_json(ckpt.params.layer1.a)},
        {"b", vector_to_json(ckpt.params.layer1.b)},
        {"u", matrix_to_json(ckpt.params.layer1.u)}}},
      {"layer2",
       {{"a", matrix_to_json(ckpt.params.layer2.a)},
        {"b", vector_to_json(ckpt.params.layer2.b)}}},
      {"layer3",
       {{"a", matrix_to_json(ckpt.params.layer3.a)},
        {"b", vector_to_json(ckpt.params.layer3.b)}}},
  };
  return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(Errc::IoError, std::string("checkpoint parse: ") + e.what());
  }
  if (j.value("schema_version", 0) != 1) {
    fail(Errc::ConfigError, "unsupported checkpoint schema_version");
  }
  Checkpoint c;
  c.policy.mode = mode_from_name(j.at("mode").get<std::string>());
  c.policy.output_activation =
      activation_from_name(j.at("output_activation").get<std::string>());
  c.policy.seed = j.at("seed").get<std::uint64_t>();
  c.policy.dropout_rate = j.at("dropout_rate").get<double>();
  c.policy.max_shares = j.at("max_shares").get<double>();
  const auto sizes = j.at("hidden_sizes");
  for (std::size_t i = 0; i < 3 && i < sizes.size(); ++i) {
    c.policy.hidden_sizes[i] = sizes[i].get<int>();
  }
  c.feature_dim = j.at("dims").at("feature_dim").get<int>();
  c.num_assets = j.at("dims").at("num_assets").get<int>();
  const auto& layers = j.at("layers");
  c.params.layer1.a = matrix_from_json(layers.at("layer1").at("a"));
  c.params.layer1.b = vector_from_json(layers.at("layer1").at("b"));
  c.params.layer1.u = matrix_from_json(layers.at("layer1").at("u"));
  c.params.layer2.a = matrix_from_json(layers.at("layer2").at("a"));
  c.params.layer2.b = vector_from_json(layers.at("layer2").at("b"));
  c.params.layer3.a = matrix_from_json(layers.at("layer3").at("a"));
  c.params.layer3.b = vector_from_json(layers.at("layer3").at("b"));
  c.params.validate();
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  atomic_write_file(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_json(read_file(path));
}

std::string mask_checkpoint_to_json(const MaskParameters& params,
                                    std::uint64_t seed) {
  params.validate();
  json j;
  j["schema_version"] = 1;
  j["seed"] = seed;
  j["w1"] = matrix_to_json(params.w1);
  j["b1"] = vector_to_json(params.b1);
  j["w2"] = vector_to_json(params.w2);
  j["b2"] = params.b2;
  return j.dump(2) + "\n";
}

MaskParameters mask_checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(Errc::IoError, std::string("mask checkpoint parse: ") + e.what());
  }
  MaskParameters p;
  p.w1 = matrix_from_json(j.at("w1"));
  p.b1 = vector_from_json(j.at("b1"));
  p.w2 = vector_from_json(j.at("w2"));
  p.b2 = j.at("b2").get<double>();
  p.validate();
  return p;
}

}  // namespace rdnn
