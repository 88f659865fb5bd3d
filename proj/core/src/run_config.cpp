#include "scs/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include "scs/errors.hpp"

namespace scs {
namespace {

using Setter = std::function<void(RunConfig&, const toml::node&, const std::string&)>;

[[noreturn]] void type_error(const std::string& path, const char* expected) {
  throw ConfigError(path, std::string("expected ") + expected);
}

double as_double(const toml::node& node, const std::string& path) {
  if (auto v = node.as_floating_point()) return v->get();
  if (auto v = node.as_integer()) return static_cast<double>(v->get());
  type_error(path, "a number");
}

std::int64_t as_int(const toml::node& node, const std::string& path) {
  if (auto v = node.as_integer()) return v->get();
  type_error(path, "an integer");
}

bool as_bool(const toml::node& node, const std::string& path) {
  if (auto v = node.as_boolean()) return v->get();
  type_error(path, "a boolean");
}

std::string as_string(const toml::node& node, const std::string& path) {
  if (auto v = node.as_string()) return v->get();
  type_error(path, "a string");
}

template <typename T>
Setter number(T RunConfig::*section, double T::*member) {
  return [=](RunConfig& c, const toml::node& n, const std::string& p) { (c.*section).*member = as_double(n, p); };
}

template <typename T, typename I>
Setter integer(T RunConfig::*section, I T::*member) {
  return [=](RunConfig& c, const toml::node& n, const std::string& p) {
    const auto v = as_int(n, p);
    if constexpr (std::is_unsigned_v<I>) {
      if (v < 0) throw ConfigError(p, "must be non-negative");
    }
    (c.*section).*member = static_cast<I>(v);
  };
}

template <typename T>
Setter boolean(T RunConfig::*section, bool T::*member) {
  return [=](RunConfig& c, const toml::node& n, const std::string& p) { (c.*section).*member = as_bool(n, p); };
}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"env",
       {{"seed", integer(&RunConfig::env, &EnvConfig::seed)},
        {"n_tasks", integer(&RunConfig::env, &EnvConfig::n_tasks)},
        {"depth", integer(&RunConfig::env, &EnvConfig::depth)},
        {"branching", integer(&RunConfig::env, &EnvConfig::branching)},
        {"n_options", integer(&RunConfig::env, &EnvConfig::n_options)},
        {"enumeration_cap", integer(&RunConfig::env, &EnvConfig::enumeration_cap)},
        {"observation",
         [](RunConfig& c, const toml::node& n, const std::string& p) {
           const auto mode = as_string(n, p);
           if (mode == "evidence") c.env.observation.mode = ObservationMode::evidence;
           else if (mode == "gaussian") c.env.observation.mode = ObservationMode::gaussian;
           else throw ConfigError(p, "expected \"evidence\" or \"gaussian\"");
         }},
        {"obs_dim",
         [](RunConfig& c, const toml::node& n, const std::string& p) {
           const auto v = as_int(n, p);
           if (v < 1) throw ConfigError(p, "must be >= 1");
           c.env.observation.dim = static_cast<std::size_t>(v);
         }},
        {"evidence_strength",
         [](RunConfig& c, const toml::node& n, const std::string& p) { c.env.observation.evidence_strength = as_double(n, p); }},
        {"clutter_std",
         [](RunConfig& c, const toml::node& n, const std::string& p) { c.env.observation.clutter_std = as_double(n, p); }}}},
      {"policy",
       {{"temperature", number(&RunConfig::policy, &PolicyConfig::temperature)},
        {"init_weight_std", number(&RunConfig::policy, &PolicyConfig::init_weight_std)},
        {"evidence_prior", number(&RunConfig::policy, &PolicyConfig::evidence_prior)}}},
      {"sampler",
       {{"truncation_ratio", number(&RunConfig::sampler, &SamplerConfig::truncation_ratio)},
        {"n_resamples", integer(&RunConfig::sampler, &SamplerConfig::n_resamples)},
        {"sigma_min", number(&RunConfig::sampler, &SamplerConfig::sigma_min)},
        {"sigma_max", number(&RunConfig::sampler, &SamplerConfig::sigma_max)}}},
      {"rewards",
       {{"accuracy_weight", number(&RunConfig::rewards, &RewardConfig::accuracy_weight)},
        {"format_weight", number(&RunConfig::rewards, &RewardConfig::format_weight)},
        {"consistency_weight", number(&RunConfig::rewards, &RewardConfig::consistency_weight)},
        {"normalize_consistency", boolean(&RunConfig::rewards, &RewardConfig::normalize_consistency)}}},
      {"estimator",
       {{"algorithm",
         [](RunConfig& c, const toml::node& n, const std::string& p) {
           try {
             c.estimator.algorithm = parse_algorithm(as_string(n, p));
           } catch (const InvalidArgument& e) {
             throw ConfigError(p, e.what());
           }
         }},
        {"kl_coef", number(&RunConfig::estimator, &EstimatorConfig::kl_coef)},
        {"reward_clip",
         [](RunConfig& c, const toml::node& n, const std::string& p) {
           const double v = as_double(n, p);
           // 0 disables clipping.
           c.estimator.reward_clip = v == 0.0 ? std::nullopt : std::optional<double>(v);
         }},
        {"epsilon", number(&RunConfig::estimator, &EstimatorConfig::epsilon)}}},
      {"trainer",
       {{"learning_rate", number(&RunConfig::trainer, &TrainerConfig::learning_rate)},
        {"batch_size", integer(&RunConfig::trainer, &TrainerConfig::batch_size)},
        {"samples_per_prompt", integer(&RunConfig::trainer, &TrainerConfig::samples_per_prompt)},
        {"total_steps", integer(&RunConfig::trainer, &TrainerConfig::total_steps)},
        {"seed", integer(&RunConfig::trainer, &TrainerConfig::seed)},
        {"optimizer",
         [](RunConfig& c, const toml::node& n, const std::string& p) {
           const auto name = as_string(n, p);
           if (name == "sgd") c.trainer.optimizer = OptimizerKind::sgd;
           else if (name == "adam") c.trainer.optimizer = OptimizerKind::adam;
           else throw ConfigError(p, "expected \"sgd\" or \"adam\"");
         }},
        {"adam_beta1", number(&RunConfig::trainer, &TrainerConfig::adam_beta1)},
        {"adam_beta2", number(&RunConfig::trainer, &TrainerConfig::adam_beta2)},
        {"adam_epsilon", number(&RunConfig::trainer, &TrainerConfig::adam_epsilon)},
        {"scs_enabled", boolean(&RunConfig::trainer, &TrainerConfig::scs_enabled)},
        {"workers", integer(&RunConfig::trainer, &TrainerConfig::workers)},
        {"checkpoint_every",
         [](RunConfig& c, const toml::node& n, const std::string& p) {
           const auto v = as_int(n, p);
           if (v < 0) throw ConfigError(p, "must be >= 0");
           c.checkpoint_every = static_cast<int>(v);
         }},
        {"trace", [](RunConfig& c, const toml::node& n, const std::string& p) { c.trace = as_bool(n, p); }}}},
  };
  return table;
}

void apply_override(toml::table& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "override must look like section.key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  const auto dot = path.find('.');
  if (dot == std::string::npos) throw ConfigError(path, "override key must be section.key");
  const std::string section = path.substr(0, dot);
  const std::string name = path.substr(dot + 1);

  toml::table* target = root[section].as_table();
  if (target == nullptr) {
    root.insert_or_assign(section, toml::table{});
    target = root[section].as_table();
  }
  try {
    toml::table parsed = toml::parse("v = " + text);
    target->insert_or_assign(name, *parsed.get("v"));
  } catch (const toml::parse_error&) {
    target->insert_or_assign(name, text);
  }
}

RunConfig from_table(const toml::table& root) {
  RunConfig config;
  const auto& sections = schema();
  for (const auto& [section_key, section_node] : root) {
    const std::string section(section_key.str());
    if (section == "name") {
      config.name = as_string(section_node, section);
      continue;
    }
    const auto it = sections.find(section);
    if (it == sections.end()) throw ConfigError(section, "unknown section");
    const toml::table* table = section_node.as_table();
    if (table == nullptr) throw ConfigError(section, "expected a table");
    for (const auto& [name_key, value] : *table) {
      const std::string name(name_key.str());
      const std::string path = section + "." + name;
      const auto setter = it->second.find(name);
      if (setter == it->second.end()) throw ConfigError(path, "unknown key");
      setter->second(config, value, path);
    }
  }
  config.validate();
  return config;
}

template <typename Fn>
void check(const std::string& section, Fn&& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    std::string msg = e.what();
    // Messages of the form "section.key must ..." carry their own field path.
    const auto space = msg.find(' ');
    const std::string head = msg.substr(0, space);
    if (head.find('.') != std::string::npos && space != std::string::npos) {
      throw ConfigError(head, msg.substr(space + 1));
    }
    throw ConfigError(section, msg);
  }
}

}  // namespace

void RunConfig::validate() const {
  check("env", [&] { env.validate(); });
  check("policy", [&] {
    if (!(policy.temperature > 0.0)) throw InvalidArgument("policy.temperature must be > 0");
    if (!(policy.init_weight_std >= 0.0)) throw InvalidArgument("policy.init_weight_std must be >= 0");
  });
  check("sampler", [&] {
    if (!(sampler.truncation_ratio > 0.0 && sampler.truncation_ratio < 1.0)) {
      throw InvalidArgument("sampler.truncation_ratio must lie in (0, 1)");
    }
    if (sampler.n_resamples < 1) throw InvalidArgument("sampler.n_resamples must be >= 1");
    if (!(sampler.sigma_min >= 0.0)) throw InvalidArgument("sampler.sigma_min must be >= 0");
    if (!(sampler.sigma_max >= sampler.sigma_min)) {
      throw InvalidArgument("sampler.sigma_max must be >= sampler.sigma_min");
    }
  });
  check("rewards", [&] { rewards.validate(); });
  check("estimator", [&] { estimator.validate(); });
  check("trainer", [&] {
    if (!(trainer.learning_rate >= 0.0)) throw InvalidArgument("trainer.learning_rate must be >= 0");
    if (trainer.total_steps < 0) throw InvalidArgument("trainer.total_steps must be >= 0");
    if (trainer.batch_size < 0 || trainer.batch_size > env.n_tasks) {
      throw InvalidArgument("trainer.batch_size must lie in [0, env.n_tasks]");
    }
    if (trainer.samples_per_prompt < 0) throw InvalidArgument("trainer.samples_per_prompt must be >= 0");
    if (trainer.workers < 1) throw InvalidArgument("trainer.workers must be >= 1");
    const int k = trainer.resolved_samples_per_prompt(estimator.algorithm);
    if ((estimator.algorithm == Algorithm::grpo || estimator.algorithm == Algorithm::rloo) && k < 2) {
      throw InvalidArgument("trainer.samples_per_prompt must be >= 2 for group estimators");
    }
  });
}

RunConfig parse_run_config(std::string_view toml_text, std::span<const std::string> overrides,
                           std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " (" << e.source() << ")";
    throw ConfigError("", msg.str());
  }
  for (const auto& o : overrides) apply_override(root, o);
  return from_table(root);
}

RunConfig load_run_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), overrides, path.string());
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  using nlohmann::json;
  return json{
      {"name", c.name},
      {"env",
       {{"seed", c.env.seed},
        {"n_tasks", c.env.n_tasks},
        {"depth", c.env.depth},
        {"branching", c.env.branching},
        {"n_options", c.env.n_options},
        {"enumeration_cap", c.env.enumeration_cap},
        {"observation", c.env.observation.mode == ObservationMode::evidence ? "evidence" : "gaussian"},
        {"obs_dim", c.env.observation.dim},
        {"evidence_strength", c.env.observation.evidence_strength},
        {"clutter_std", c.env.observation.clutter_std}}},
      {"policy", {{"temperature", c.policy.temperature}, {"init_weight_std", c.policy.init_weight_std},
                  {"evidence_prior", c.policy.evidence_prior}}},
      {"sampler",
       {{"truncation_ratio", c.sampler.truncation_ratio},
        {"n_resamples", c.sampler.n_resamples},
        {"sigma_min", c.sampler.sigma_min},
        {"sigma_max", c.sampler.sigma_max}}},
      {"rewards",
       {{"accuracy_weight", c.rewards.accuracy_weight},
        {"format_weight", c.rewards.format_weight},
        {"consistency_weight", c.rewards.consistency_weight},
        {"normalize_consistency", c.rewards.normalize_consistency}}},
      {"estimator",
       {{"algorithm", std::string(to_string(c.estimator.algorithm))},
        {"kl_coef", c.estimator.kl_coef},
        {"reward_clip", c.estimator.reward_clip ? json(*c.estimator.reward_clip) : json(0.0)},
        {"epsilon", c.estimator.epsilon}}},
      {"trainer",
       {{"learning_rate", c.trainer.learning_rate},
        {"batch_size", c.trainer.batch_size},
        {"samples_per_prompt", c.trainer.samples_per_prompt},
        {"total_steps", c.trainer.total_steps},
        {"seed", c.trainer.seed},
        {"optimizer", c.trainer.optimizer == OptimizerKind::sgd ? "sgd" : "adam"},
        {"adam_beta1", c.trainer.adam_beta1},
        {"adam_beta2", c.trainer.adam_beta2},
        {"adam_epsilon", c.trainer.adam_epsilon},
        {"scs_enabled", c.trainer.scs_enabled},
        {"workers", c.trainer.workers},
        {"checkpoint_every", c.checkpoint_every},
        {"trace", c.trace}}},
  };
}

}  // namespace scs
