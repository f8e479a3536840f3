#include "rgail/run_config.h"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rgail/checkpoint.h"

namespace rgail {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw std::invalid_argument("config key '" + key + "': not a number: '" +
                                text + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw std::invalid_argument("config key '" + key + "': not an integer: '" +
                                text + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  if (!text.empty() && text[0] == '-') {
    throw std::invalid_argument("config key '" + key + "': negative seed");
  }
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw std::invalid_argument("config key '" + key + "': not a seed: '" +
                                text + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& key, const std::string& text,
                          F parse) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse(key, item));
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& values, F format) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format(values[i]);
  }
  return out;
}

}  // namespace

std::string to_string(EntropySign sign) {
  return sign == EntropySign::kBonus ? "bonus" : "penalty";
}

EntropySign parse_entropy_sign(const std::string& name) {
  if (name == "bonus") return EntropySign::kBonus;
  if (name == "penalty") return EntropySign::kPenalty;
  throw std::invalid_argument("unknown entropy convention '" + name +
                              "' (expected bonus or penalty)");
}

void RunConfig::validate() const {
  if (format_version != kRunConfigFormatVersion) {
    throw std::invalid_argument("unsupported config format_version " +
                                std::to_string(format_version));
  }
  if (environment != "gridworld") {
    throw std::invalid_argument("unknown environment '" + environment + "'");
  }
  auto check_eps = [](double e, const char* what) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
    }
  };
  check_eps(expert_epsilon, "expert_epsilon");
  if (learner_epsilons.empty()) {
    throw std::invalid_argument("learner_epsilons must not be empty");
  }
  for (double e : learner_epsilons) check_eps(e, "learner_epsilons");
  for (double e : test_epsilons) check_eps(e, "test_epsilons");
  if (alphas.empty()) throw std::invalid_argument("alphas must not be empty");
  for (double a : alphas) {
    if (!(a > 0.0 && a <= 1.0)) {
      throw std::invalid_argument("alphas must lie in (0, 1]");
    }
  }
  if (seeds.empty()) throw std::invalid_argument("seeds must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() !=
      seeds.size()) {
    throw std::invalid_argument("seeds must be distinct");
  }
  if (expert_steps <= 0 || train_steps < 0 || eval_steps <= 0) {
    throw std::invalid_argument("step budgets must be positive");
  }
  if (n_demos <= 0) throw std::invalid_argument("n_demos must be positive");
  if (!(lambda_ent >= 0.0)) {
    throw std::invalid_argument("lambda_ent must be non-negative");
  }
  if (workers <= 0) throw std::invalid_argument("workers must be positive");
  if (output_dir.empty()) {
    throw std::invalid_argument("output_dir must not be empty");
  }
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"format_version",
       [&](auto& k, auto& v) { c.format_version = static_cast<int>(parse_int(k, v)); }},
      {"environment", [&](auto&, auto& v) { c.environment = v; }},
      {"expert_epsilon", [&](auto& k, auto& v) { c.expert_epsilon = parse_double(k, v); }},
      {"learner_epsilons",
       [&](auto& k, auto& v) { c.learner_epsilons = parse_list<double>(k, v, parse_double); }},
      {"alphas", [&](auto& k, auto& v) { c.alphas = parse_list<double>(k, v, parse_double); }},
      {"seeds",
       [&](auto& k, auto& v) { c.seeds = parse_list<std::uint64_t>(k, v, parse_uint); }},
      {"test_epsilons",
       [&](auto& k, auto& v) { c.test_epsilons = parse_list<double>(k, v, parse_double); }},
      {"expert_steps", [&](auto& k, auto& v) { c.expert_steps = parse_int(k, v); }},
      {"expert_seed", [&](auto& k, auto& v) { c.expert_seed = parse_uint(k, v); }},
      {"expert_path", [&](auto&, auto& v) { c.expert_path = v; }},
      {"n_demos", [&](auto& k, auto& v) { c.n_demos = static_cast<int>(parse_int(k, v)); }},
      {"demo_seed", [&](auto& k, auto& v) { c.demo_seed = parse_uint(k, v); }},
      {"train_steps", [&](auto& k, auto& v) { c.train_steps = parse_int(k, v); }},
      {"lambda_ent", [&](auto& k, auto& v) { c.lambda_ent = parse_double(k, v); }},
      {"entropy_convention", [&](auto&, auto& v) { c.entropy_sign = parse_entropy_sign(v); }},
      {"initial_log_std", [&](auto& k, auto& v) { c.initial_log_std = parse_double(k, v); }},
      {"eval_steps", [&](auto& k, auto& v) { c.eval_steps = parse_int(k, v); }},
      {"eval_seed", [&](auto& k, auto& v) { c.eval_seed = parse_uint(k, v); }},
      {"output_dir", [&](auto&, auto& v) { c.output_dir = v; }},
      {"workers", [&](auto& k, auto& v) { c.workers = static_cast<int>(parse_int(k, v)); }},
  };

  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": duplicate key '" + key + "'");
    }
    it->second(key, value);
  }
  if (!seen.count("format_version")) {
    throw std::invalid_argument("config is missing format_version");
  }
  c.validate();
  return c;
}

std::string to_string(const RunConfig& c) {
  auto u64 = [](std::uint64_t v) { return std::to_string(v); };
  std::ostringstream out;
  out << "format_version = " << c.format_version << "\n"
      << "environment = " << c.environment << "\n"
      << "expert_epsilon = " << format_double(c.expert_epsilon) << "\n"
      << "learner_epsilons = " << join(c.learner_epsilons, format_double) << "\n"
      << "alphas = " << join(c.alphas, format_double) << "\n"
      << "seeds = " << join(c.seeds, u64) << "\n"
      << "test_epsilons = " << join(c.test_epsilons, format_double) << "\n"
      << "expert_steps = " << c.expert_steps << "\n"
      << "expert_seed = " << c.expert_seed << "\n"
      << "expert_path = " << c.expert_path << "\n"
      << "n_demos = " << c.n_demos << "\n"
      << "demo_seed = " << c.demo_seed << "\n"
      << "train_steps = " << c.train_steps << "\n"
      << "lambda_ent = " << format_double(c.lambda_ent) << "\n"
      << "entropy_convention = " << to_string(c.entropy_sign) << "\n"
      << "initial_log_std = " << format_double(c.initial_log_std) << "\n"
      << "eval_steps = " << c.eval_steps << "\n"
      << "eval_seed = " << c.eval_seed << "\n"
      << "output_dir = " << c.output_dir << "\n"
      << "workers = " << c.workers << "\n";
  return out.str();
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path));
}

void save_run_config(const RunConfig& config, const std::string& path) {
  write_file(path, to_string(config));
}

TrainConfig make_train_config(const RunConfig& config, double learner_epsilon,
                              double alpha, std::uint64_t run_seed) {
  TrainConfig t;
  t.alpha = alpha;
  t.lambda_ent = config.lambda_ent;
  t.total_steps = config.train_steps;
  t.entropy_sign = config.entropy_sign;
  t.initial_log_std = config.initial_log_std;
  t.seed = run_seed;
  t.env.epsilon = learner_epsilon;
  t.validate();
  return t;
}

}  // namespace rgail
