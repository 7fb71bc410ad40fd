#include "adbs/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "adbs/error.hpp"

namespace adbs {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw InvalidInput(where() + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    if (!type_matches<T>(*it)) throw InvalidInput(where(key) + " has the wrong type");
    out = it->template get<T>();
  }

  void read_optional(const char* key, std::optional<double>& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    if (!it->is_number()) throw InvalidInput(where(key) + " must be a number or null");
    out = it->get<double>();
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) throw InvalidInput("unknown key '" + where(it.key()) + "'");
    }
  }

 private:
  template <typename T>
  static bool type_matches(const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      return v.is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
      return v.is_number_integer();
    } else if constexpr (std::is_floating_point_v<T>) {
      return v.is_number();
    } else {
      return v.is_string();
    }
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

PolicyConfig policy_from_json(const json& j) {
  PolicyConfig p;
  Reader r(j, "policy");
  r.read("name", p.name);
  r.read("epsilon", p.epsilon);
  r.read("nu", p.nu);
  r.read("lambda", p.lambda);
  r.read("steps", p.steps);
  r.read("learning_rate", p.learning_rate);
  r.read("greedy_c", p.greedy_c);
  r.read("alpha", p.alpha);
  r.read("width", p.width);
  r.read("depth", p.depth);
  std::string cov = to_string(p.covariance);
  r.read("covariance", cov);
  p.covariance = covariance_choice_from_string(cov);
  r.read("per_arm_coin", p.per_arm_coin);
  r.read("unit_norm_contexts", p.unit_norm_contexts);
  r.read("frequency_hz", p.frequency_hz);
  r.read_optional("ucb1_delta", p.ucb1_delta);
  r.finish();
  return p;
}

EnvConfig env_from_json(const json& j) {
  EnvConfig e;
  Reader r(j, "env");
  r.read("kappa", e.kappa);
  r.read("f_half", e.f_half);
  r.read("hill_exponent", e.hill_exponent);
  r.read("b_healthy", e.b_healthy);
  r.read("b_pd", e.b_pd);
  r.read("initial_beta", e.initial_beta);
  r.read("noise_sigma_latent", e.noise_sigma_latent);
  r.read("noise_sigma_obs", e.noise_sigma_obs);
  r.read("ei_floor", e.ei_floor);
  r.read("ei_slope", e.ei_slope);
  r.read("ei_noise", e.ei_noise);
  std::string model = to_string(e.ei_noise_model);
  r.read("ei_noise_model", model);
  e.ei_noise_model = ei_noise_model_from_string(model);
  r.read("sample_rate", e.sample_rate);
  r.read("penalty_coefficient", e.penalty_coefficient);
  r.read("beta_weight", e.beta_weight);
  r.read("oscillation_hz", e.oscillation_hz);
  r.read("window_seconds", e.window_seconds);
  r.read("sample_interval", e.sample_interval);
  r.read("arm_count", e.arms.arm_count);
  r.read("frequency_step", e.arms.frequency_step);
  r.finish();
  return e;
}

}  // namespace

std::string to_string(CovarianceChoice c) {
  switch (c) {
    case CovarianceChoice::kAuto: return "auto";
    case CovarianceChoice::kFull: return "full";
    case CovarianceChoice::kDiagonal: return "diagonal";
  }
  return "auto";
}

CovarianceChoice covariance_choice_from_string(const std::string& s) {
  if (s == "auto") return CovarianceChoice::kAuto;
  if (s == "full") return CovarianceChoice::kFull;
  if (s == "diagonal") return CovarianceChoice::kDiagonal;
  throw InvalidInput("covariance must be auto, full or diagonal (got '" + s + "')");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Reader r(j, "");
  if (const json* p = r.child("policy")) c.policy = policy_from_json(*p);
  if (const json* e = r.child("env")) c.env = env_from_json(*e);
  r.read("rounds", c.rounds);
  if (const json* s = r.child("seeds")) {
    if (s->is_string()) {
      c.seeds = parse_seed_list(s->get<std::string>());
    } else if (s->is_array()) {
      c.seeds.clear();
      for (const auto& v : *s) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
          throw InvalidInput("seeds must be non-negative integers");
        }
        c.seeds.push_back(v.get<std::uint64_t>());
      }
    } else {
      throw InvalidInput("seeds must be an array or a range string");
    }
  }
  r.read("delay", c.delay);
  r.read("threshold_round", c.threshold_round);
  r.read("output", c.output);
  r.read("format", c.format);
  r.finish();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("config file '" + path + "': " + e.what());
  }
  return run_config_from_json(j);
}

json to_json(const PolicyConfig& p) {
  json j = {{"name", p.name},
            {"epsilon", p.epsilon},
            {"nu", p.nu},
            {"lambda", p.lambda},
            {"steps", p.steps},
            {"learning_rate", p.learning_rate},
            {"greedy_c", p.greedy_c},
            {"alpha", p.alpha},
            {"width", p.width},
            {"depth", p.depth},
            {"covariance", to_string(p.covariance)},
            {"per_arm_coin", p.per_arm_coin},
            {"unit_norm_contexts", p.unit_norm_contexts},
            {"frequency_hz", p.frequency_hz}};
  j["ucb1_delta"] = p.ucb1_delta ? json(*p.ucb1_delta) : json(nullptr);
  return j;
}

json to_json(const EnvConfig& e) {
  return {{"kappa", e.kappa},
          {"f_half", e.f_half},
          {"hill_exponent", e.hill_exponent},
          {"b_healthy", e.b_healthy},
          {"b_pd", e.b_pd},
          {"initial_beta", e.initial_beta},
          {"noise_sigma_latent", e.noise_sigma_latent},
          {"noise_sigma_obs", e.noise_sigma_obs},
          {"ei_floor", e.ei_floor},
          {"ei_slope", e.ei_slope},
          {"ei_noise", e.ei_noise},
          {"ei_noise_model", to_string(e.ei_noise_model)},
          {"sample_rate", e.sample_rate},
          {"penalty_coefficient", e.penalty_coefficient},
          {"beta_weight", e.beta_weight},
          {"oscillation_hz", e.oscillation_hz},
          {"window_seconds", e.window_seconds},
          {"sample_interval", e.sample_interval},
          {"arm_count", e.arms.arm_count},
          {"frequency_step", e.arms.frequency_step}};
}

json to_json(const RunConfig& c) {
  return {{"policy", to_json(c.policy)},
          {"env", to_json(c.env)},
          {"rounds", c.rounds},
          {"seeds", c.seeds},
          {"delay", c.delay},
          {"threshold_round", c.threshold_round},
          {"output", c.output},
          {"format", c.format}};
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  auto parse_one = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw InvalidInput("bad seed '" + s + "' in '" + text + "'");
    }
    return std::stoull(s);
  };
  std::vector<std::uint64_t> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const auto lo = parse_one(text.substr(0, dots));
    const auto hi = parse_one(text.substr(dots + 2));
    if (hi < lo) throw InvalidInput("seed range '" + text + "' is empty");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(parse_one(part));
  if (out.empty()) throw InvalidInput("empty seed list");
  return out;
}

}  // namespace adbs
