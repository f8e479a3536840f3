// Command-line front end: expert training, demonstration collection,
// robust GAILfO training, evaluation, alpha sweeps and sweep reports.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "rgail/checkpoint.h"
#include "rgail/evaluation.h"
#include "rgail/rollout.h"
#include "rgail/run_config.h"
#include "rgail/sweep.h"
#include "rgail/trainer.h"

namespace fs = std::filesystem;
using namespace rgail;

namespace {

void log_line(const std::string& msg) { std::cerr << msg << std::endl; }

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

GaussianPolicy load_any_policy(const std::string& path) {
  if (fs::is_directory(path)) return load_train_state(path).player;
  return load_policy(path);
}

void append_file(const std::string& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "ab");
  if (!f) throw std::runtime_error("cannot write " + path);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

struct ExpertArgs {
  double epsilon = 0.0;
  std::int64_t steps = 500000;
  std::uint64_t seed = 0;
  std::string out = "expert.json";
  std::string metrics;
};

int cmd_train_expert(const ExpertArgs& a) {
  GridConfig env;
  env.epsilon = a.epsilon;
  ExpertConfig ec;
  ec.total_steps = a.steps;
  ec.seed = a.seed;
  std::string csv = "iteration,env_steps,mean_true_return,goal_fraction,entropy\n";
  const GaussianPolicy expert = train_expert_ppo(env, ec, [&](const ExpertMetrics& m) {
    char line[256];
    std::snprintf(line, sizeof(line), "%lld,%lld,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(m.iteration),
                  static_cast<long long>(m.env_steps), m.mean_true_return,
                  m.goal_fraction, m.entropy);
    csv += line;
    if (m.iteration % 10 == 0) {
      log_line("iter " + std::to_string(m.iteration) + " steps " +
               std::to_string(m.env_steps) + " return " +
               std::to_string(m.mean_true_return) + " goal " +
               std::to_string(m.goal_fraction));
    }
  });
  save_policy(expert, a.out);
  if (!a.metrics.empty()) write_file(a.metrics, csv);
  const EvalReport rep = evaluate_policy(expert, env, kDefaultEvalSteps, a.seed);
  std::cout << "goal_fraction " << rep.goal_fraction() << "\n"
            << "mean_return " << rep.mean_return << "\n";
  return 0;
}

struct DemoArgs {
  std::string expert;
  double epsilon = 0.0;
  int n = 10;
  std::uint64_t seed = 0;
  std::string out = "demos.jsonl";
};

int cmd_collect_demos(const DemoArgs& a) {
  const GaussianPolicy expert = load_any_policy(a.expert);
  GridConfig env;
  env.epsilon = a.epsilon;
  Rng rng(a.seed);
  const DemoSet demos = collect_demonstrations(env, expert, a.n, rng);
  DemoHeader header;
  header.epsilon = a.epsilon;
  header.seed = a.seed;
  save_demos(demos, header, a.out);
  std::cout << "episodes " << demos.episodes.size() << "\n"
            << "pairs " << demos.n_pairs() << "\n";
  return 0;
}

struct TrainArgs {
  double alpha = 1.0;
  double learner_epsilon = 0.0;
  std::string demos;
  std::uint64_t seed = 0;
  std::int64_t steps = 300000;
  double lambda_ent = TrainConfig{}.lambda_ent;
  std::string entropy_convention = "bonus";
  double initial_log_std = TrainConfig{}.initial_log_std;
  std::string out = "run";
  bool resume = false;
  int checkpoint_every = 10;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig tc;
  tc.alpha = a.alpha;
  tc.env.epsilon = a.learner_epsilon;
  tc.seed = a.seed;
  tc.total_steps = a.steps;
  tc.lambda_ent = a.lambda_ent;
  tc.entropy_sign = parse_entropy_sign(a.entropy_convention);
  tc.initial_log_std = a.initial_log_std;
  tc.validate();

  const DemoSet demos = load_demos(a.demos);
  const fs::path dir(a.out);
  const fs::path ckpt = dir / "checkpoint";
  const std::string metrics = (dir / "metrics.csv").string();
  fs::create_directories(ckpt);

  std::unique_ptr<RobustGailfoTrainer> trainer;
  if (a.resume) {
    const auto manifest = nlohmann::json::parse(read_file((ckpt / "manifest.json").string()));
    if (manifest.at("alpha_hex").get<std::string>() != hexfloat(tc.alpha) ||
        manifest.at("seed").get<std::uint64_t>() != tc.seed) {
      throw std::invalid_argument("checkpoint in " + ckpt.string() +
                                  " was written with a different alpha or seed");
    }
    TrainState state = load_train_state(ckpt.string());
    log_line("resuming at iteration " + std::to_string(state.iteration));
    trainer = std::make_unique<RobustGailfoTrainer>(tc, demos, std::move(state));
    if (!fs::exists(metrics)) write_file(metrics, metrics_csv_header() + "\n");
  } else {
    trainer = std::make_unique<RobustGailfoTrainer>(tc, demos);
    write_file(metrics, metrics_csv_header() + "\n");
  }

  while (!trainer->finished()) {
    const MetricsRow row = trainer->run_iteration();
    append_file(metrics, to_csv_row(row) + "\n");
    if (row.iteration % 10 == 0) {
      log_line("iter " + std::to_string(row.iteration) + " steps " +
               std::to_string(row.env_steps) + " true_return " +
               std::to_string(row.mean_episode_return_true) + " D_agent " +
               std::to_string(row.mean_d_agent) + " D_expert " +
               std::to_string(row.mean_d_expert));
    }
    if (a.checkpoint_every > 0 && row.iteration % a.checkpoint_every == 0) {
      save_train_state(trainer->state(), tc, ckpt.string());
    }
  }
  save_train_state(trainer->state(), tc, ckpt.string());
  save_policy(trainer->state().player, (dir / "policy.json").string());
  std::cout << "iterations " << trainer->state().iteration << "\n"
            << "env_steps " << trainer->state().env_steps << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  double epsilon = 0.0;
  std::int64_t steps = kDefaultEvalSteps;
  std::uint64_t seed = 0;
  std::string references;
  bool mean_action = false;
};

int cmd_evaluate(const EvalArgs& a) {
  const GaussianPolicy policy = load_any_policy(a.checkpoint);
  GridConfig env;
  env.epsilon = a.epsilon;
  const EvalReport rep = evaluate_policy(policy, env, a.steps, a.seed, a.mean_action);
  nlohmann::json out = {{"epsilon", rep.epsilon},
                        {"total_steps_evaluated", rep.total_steps_evaluated},
                        {"episodes_completed", rep.episodes_completed},
                        {"last_truncated", rep.last_truncated},
                        {"mean_return", rep.mean_return},
                        {"std_error", rep.std_error},
                        {"cumulative_return", rep.cumulative_return},
                        {"goal_fraction", rep.goal_fraction()},
                        {"seeds", rep.seeds}};
  if (!a.references.empty()) {
    const ReferenceReturns refs = load_references(a.references);
    if (refs.epsilon != a.epsilon || refs.steps != a.steps) {
      throw std::invalid_argument("reference returns were computed for another epsilon or budget");
    }
    out["normalized_score"] = refs.score(rep.cumulative_return);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, int workers) {
  RunConfig config = load_run_config(config_path);
  if (workers > 0) config.workers = workers;
  const SweepResult result = run_sweep(config, log_line);
  int failed = 0;
  for (const auto& row : result.transfer) failed += row.ok ? 0 : 1;
  std::cout << "transfer_rows " << result.transfer.size() << "\n"
            << "robustness_rows " << result.robustness.size() << "\n"
            << "failed " << failed << "\n"
            << "output " << (fs::path(config.output_dir) / "transfer.csv").string()
            << "\n";
  return failed ? 2 : 0;
}

int cmd_report(const std::string& in, const std::string& out) {
  const std::string csv = to_csv(aggregate(read_csv(in)));
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    write_file(out, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust GAILfO on the continuous gridworld"};
  app.require_subcommand(1);

  ExpertArgs ea;
  auto* expert = app.add_subcommand("train-expert", "Train a PPO expert on the true reward");
  expert->add_option("--epsilon", ea.epsilon, "Perturbation probability")->check(CLI::Range(0.0, 1.0));
  expert->add_option("--steps", ea.steps, "Environment step budget")->check(CLI::PositiveNumber);
  expert->add_option("--seed", ea.seed);
  expert->add_option("--out", ea.out, "Policy checkpoint path");
  expert->add_option("--metrics", ea.metrics, "Per-iteration CSV");

  DemoArgs da;
  auto* demos = app.add_subcommand("collect-demos", "Record state-only expert demonstrations");
  demos->add_option("--expert", da.expert, "Expert policy checkpoint")->required();
  demos->add_option("--epsilon", da.epsilon)->check(CLI::Range(0.0, 1.0));
  demos->add_option("-n,--episodes", da.n)->check(CLI::PositiveNumber);
  demos->add_option("--seed", da.seed);
  demos->add_option("--out", da.out);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train robust GAILfO from demonstrations");
  train->add_option("--alpha", ta.alpha, "Player control probability")->check(CLI::Range(0.0, 1.0));
  train->add_option("--learner-epsilon", ta.learner_epsilon)->check(CLI::Range(0.0, 1.0));
  train->add_option("--expert-demos", ta.demos, "Demonstration file")->required();
  train->add_option("--seed", ta.seed);
  train->add_option("--steps", ta.steps)->check(CLI::NonNegativeNumber);
  train->add_option("--lambda-ent", ta.lambda_ent)->check(CLI::NonNegativeNumber);
  train->add_option("--entropy-convention", ta.entropy_convention)
      ->check(CLI::IsMember({"bonus", "penalty"}));
  train->add_option("--initial-log-std", ta.initial_log_std);
  train->add_option("--out", ta.out, "Run directory");
  train->add_flag("--resume", ta.resume, "Continue from <out>/checkpoint");
  train->add_option("--checkpoint-every", ta.checkpoint_every, "Iterations between checkpoints");

  EvalArgs va;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a policy over a step budget");
  evaluate->add_option("--checkpoint", va.checkpoint, "Policy file or run checkpoint directory")
      ->required();
  evaluate->add_option("--epsilon", va.epsilon)->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--steps", va.steps)->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", va.seed);
  evaluate->add_option("--references", va.references, "Reference returns for normalization");
  evaluate->add_flag("--mean-action", va.mean_action, "Act with the policy mean");

  std::string sweep_config;
  int workers = 0;
  auto* sweep = app.add_subcommand("sweep", "Run an alpha sweep from a config file");
  sweep->add_option("--config", sweep_config)->required()->check(CLI::ExistingFile);
  sweep->add_option("--workers", workers, "Override the config's worker count");

  std::string report_in, report_out;
  auto* report = app.add_subcommand("report", "Aggregate sweep results per (epsilon, alpha)");
  report->add_option("--in", report_in)->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "Output CSV, '-' for stdout");

  std::string config_out;
  auto* init = app.add_subcommand("init-config", "Write a config file with default values");
  init->add_option("--out", config_out, "Output path, stdout when omitted");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*expert) return cmd_train_expert(ea);
    if (*demos) return cmd_collect_demos(da);
    if (*train) return cmd_train(ta);
    if (*evaluate) return cmd_evaluate(va);
    if (*sweep) return cmd_sweep(sweep_config, workers);
    if (*report) return cmd_report(report_in, report_out);
    if (*init) {
      const std::string text = to_string(RunConfig{});
      if (config_out.empty()) {
        std::cout << text;
      } else {
        write_file(config_out, text);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
