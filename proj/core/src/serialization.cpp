#include "scs/serialization.hpp"

#include <fstream>

#include "scs/errors.hpp"

namespace scs {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& doc, const char* name) {
  if (!doc.contains(name)) throw InvalidArgument(std::string("missing JSON field '") + name + "'");
  try {
    return doc.at(name).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad JSON field '") + name + "': " + e.what());
  }
}

}  // namespace

json tree_to_json(const ReasoningTree& tree) {
  return json{{"depth", tree.depth()},
              {"branching", tree.branching()},
              {"n_options", tree.n_options()},
              {"leaf_option_map", std::vector<int>(tree.leaf_option_map().begin(), tree.leaf_option_map().end())},
              {"faithful_path", std::vector<int>(tree.faithful_path().begin(), tree.faithful_path().end())},
              {"seed", tree.seed()}};
}

ReasoningTree tree_from_json(const json& doc) {
  return ReasoningTree(field<int>(doc, "depth"), field<int>(doc, "branching"),
                       field<int>(doc, "n_options"), field<std::vector<int>>(doc, "leaf_option_map"),
                       field<ActionPath>(doc, "faithful_path"),
                       doc.contains("seed") ? field<std::uint64_t>(doc, "seed") : 0);
}

json policy_to_json(const Policy& policy) {
  const auto& s = policy.shape();
  std::vector<double> bias;
  std::vector<double> weights;
  bias.reserve(s.node_count * s.branching);
  weights.reserve(s.node_count * s.branching * s.obs_dim);
  for (std::size_t n = 0; n < s.node_count; ++n) {
    const auto b = policy.parameters().bias(n);
    const auto w = policy.parameters().weights(n);
    bias.insert(bias.end(), b.begin(), b.end());
    weights.insert(weights.end(), w.begin(), w.end());
  }
  return json{{"format", "scs-policy-v1"},
              {"temperature", policy.temperature()},
              {"bias_shape", {s.node_count, s.branching}},
              {"weights_shape", {s.node_count, s.branching, s.obs_dim}},
              {"bias", bias},
              {"weights", weights}};
}

Policy policy_from_json(const json& doc) {
  if (field<std::string>(doc, "format") != "scs-policy-v1") {
    throw InvalidArgument("unsupported policy checkpoint format");
  }
  const auto bias_shape = field<std::vector<std::size_t>>(doc, "bias_shape");
  const auto weights_shape = field<std::vector<std::size_t>>(doc, "weights_shape");
  if (bias_shape.size() != 2 || weights_shape.size() != 3 || bias_shape[0] != weights_shape[0] ||
      bias_shape[1] != weights_shape[1]) {
    throw InvalidArgument("inconsistent policy checkpoint shapes");
  }
  const PolicyShape shape{bias_shape[0], bias_shape[1], weights_shape[2]};
  const auto bias = field<std::vector<double>>(doc, "bias");
  const auto weights = field<std::vector<double>>(doc, "weights");
  if (bias.size() != shape.node_count * shape.branching ||
      weights.size() != shape.node_count * shape.branching * shape.obs_dim) {
    throw InvalidArgument("policy checkpoint arrays do not match their shapes");
  }
  Policy policy(shape, field<double>(doc, "temperature"));
  for (std::size_t n = 0; n < shape.node_count; ++n) {
    auto b = policy.parameters().bias(n);
    auto w = policy.parameters().weights(n);
    std::copy_n(bias.begin() + static_cast<std::ptrdiff_t>(n * shape.branching), b.size(), b.begin());
    std::copy_n(weights.begin() + static_cast<std::ptrdiff_t>(n * w.size()), w.size(), w.begin());
  }
  if (!policy.all_finite()) throw InvalidArgument("policy checkpoint contains non-finite values");
  return policy;
}

json metrics_to_json(const StepMetrics& m) {
  return json{{"step", m.step},
              {"mean_total_reward", m.mean_total_reward},
              {"mean_r_acc", m.mean_r_acc},
              {"mean_r_for", m.mean_r_for},
              {"mean_r_con", m.mean_r_con},
              {"mean_kl", m.mean_kl},
              {"unfaithful_mass", m.unfaithful_mass},
              {"expected_accuracy", m.expected_accuracy},
              {"policy_entropy", m.policy_entropy},
              {"gradient_norm", m.gradient_norm}};
}

StepMetrics metrics_from_json(const json& doc) {
  StepMetrics m;
  m.step = field<int>(doc, "step");
  m.mean_total_reward = field<double>(doc, "mean_total_reward");
  m.mean_r_acc = field<double>(doc, "mean_r_acc");
  m.mean_r_for = field<double>(doc, "mean_r_for");
  m.mean_r_con = field<double>(doc, "mean_r_con");
  m.mean_kl = doc.value("mean_kl", 0.0);
  m.unfaithful_mass = field<double>(doc, "unfaithful_mass");
  m.expected_accuracy = doc.value("expected_accuracy", 0.0);
  m.policy_entropy = field<double>(doc, "policy_entropy");
  m.gradient_norm = field<double>(doc, "gradient_norm");
  return m;
}

json trace_to_json(const ResampleTraceRecord& record) {
  json resamples = json::array();
  for (const auto& r : record.answers.trace) resamples.push_back({{"sigma", r.sigma}, {"answer", r.answer}});
  return json{{"step", record.step},
              {"task_index", record.task_index},
              {"rollout", record.rollout},
              {"prefix_length", record.answers.prefix_length},
              {"distinct_count", record.answers.distinct_count},
              {"resamples", resamples}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace scs
