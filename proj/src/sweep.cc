#include "rgail/sweep.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rgail/checkpoint.h"
#include "rgail/trainer.h"

namespace rgail {
namespace fs = std::filesystem;
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Short form for file names.
std::string tag(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Write to a sibling temp file and rename, so readers never see a
// half-written shard.
void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  write_file(tmp.string(), text);
  fs::rename(tmp, path);
}

void emit(const SweepLog& log, const std::string& msg) {
  if (log) log(msg);
}

std::string cell_name(double learner_epsilon, double alpha, std::uint64_t seed) {
  return "le" + tag(learner_epsilon) + "_a" + tag(alpha) + "_s" +
         std::to_string(seed);
}

void require_distinct_tags(const std::vector<double>& values, const char* what) {
  std::vector<std::string> tags;
  for (double v : values) tags.push_back(tag(v));
  std::sort(tags.begin(), tags.end());
  if (std::adjacent_find(tags.begin(), tags.end()) != tags.end()) {
    throw std::invalid_argument(std::string(what) +
                                " contains duplicate or indistinguishable values");
  }
}

}  // namespace

std::string transfer_csv_header() {
  return "learner_epsilon,alpha,seed,run_seed,status,deploy_epsilon,"
         "steps_evaluated,episodes_completed,last_truncated,mean_return,"
         "std_error,cumulative_return,normalized_score,goal_fraction,error";
}

std::string to_csv_row(const TransferRow& r) {
  std::ostringstream out;
  out << fmt(r.learner_epsilon) << ',' << fmt(r.alpha) << ',' << r.seed << ','
      << r.run_seed << ',' << (r.ok ? "ok" : "failed") << ','
      << fmt(r.deploy_epsilon) << ',' << r.steps_evaluated << ','
      << r.episodes_completed << ',' << (r.last_truncated ? 1 : 0) << ','
      << fmt(r.mean_return) << ',' << fmt(r.std_error) << ','
      << fmt(r.cumulative_return) << ',' << fmt(r.normalized_score) << ','
      << fmt(r.goal_fraction) << ',' << sanitize(r.error);
  return out.str();
}

std::string robustness_csv_header() {
  return "learner_epsilon,alpha,seed,run_seed,test_epsilon,status,"
         "steps_evaluated,last_truncated,mean_return,std_error,"
         "cumulative_return,normalized_score";
}

std::string to_csv_row(const RobustnessRow& r) {
  std::ostringstream out;
  out << fmt(r.learner_epsilon) << ',' << fmt(r.alpha) << ',' << r.seed << ','
      << r.run_seed << ',' << fmt(r.test_epsilon) << ','
      << (r.ok ? "ok" : "failed") << ',' << r.steps_evaluated << ','
      << (r.last_truncated ? 1 : 0) << ',' << fmt(r.mean_return) << ','
      << fmt(r.std_error) << ',' << fmt(r.cumulative_return) << ','
      << fmt(r.normalized_score);
  return out.str();
}

std::uint64_t cell_seed(std::uint64_t base_seed, double learner_epsilon,
                        double alpha) {
  const auto e = std::bit_cast<std::uint64_t>(learner_epsilon);
  const auto a = std::bit_cast<std::uint64_t>(alpha);
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed),
                    static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(e),
                    static_cast<std::uint32_t>(e >> 32),
                    static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(a >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

const ReferenceReturns& SweepInputs::reference(double epsilon) const {
  const auto it = references.find(epsilon);
  if (it == references.end()) {
    throw std::out_of_range("no reference returns for epsilon " + fmt(epsilon));
  }
  return it->second;
}

SweepInputs prepare_sweep_inputs(const RunConfig& config, const SweepLog& log) {
  config.validate();
  const fs::path root(config.output_dir);
  fs::create_directories(root / "expert");
  fs::create_directories(root / "references");

  SweepInputs inputs;
  std::string expert_file = config.expert_path;
  if (expert_file.empty()) {
    expert_file = (root / "expert" /
                   ("expert_eps" + tag(config.expert_epsilon) + "_seed" +
                    std::to_string(config.expert_seed) + "_steps" +
                    std::to_string(config.expert_steps) + ".json"))
                      .string();
    if (!fs::exists(expert_file)) {
      emit(log, "training expert -> " + expert_file);
      GridConfig env;
      env.epsilon = config.expert_epsilon;
      ExpertConfig ec;
      ec.total_steps = config.expert_steps;
      ec.seed = config.expert_seed;
      save_policy(train_expert_ppo(env, ec), expert_file);
    }
  }
  const std::string expert_text = read_file(expert_file);
  inputs.expert = policy_from_checkpoint(checkpoint_from_json(expert_text));
  const std::string fingerprint = hex(fnv1a(expert_text));

  const fs::path demo_file =
      root / "expert" /
      ("demos_" + fingerprint + "_eps" + tag(config.expert_epsilon) + "_n" +
       std::to_string(config.n_demos) + "_seed" +
       std::to_string(config.demo_seed) + ".jsonl");
  if (fs::exists(demo_file)) {
    inputs.demos = load_demos(demo_file.string());
  } else {
    emit(log, "collecting demonstrations -> " + demo_file.string());
    GridConfig env;
    env.epsilon = config.expert_epsilon;
    Rng rng(config.demo_seed);
    inputs.demos =
        collect_demonstrations(env, inputs.expert, config.n_demos, rng);
    DemoHeader header;
    header.epsilon = config.expert_epsilon;
    header.seed = config.demo_seed;
    save_demos(inputs.demos, header, demo_file.string());
  }

  std::vector<double> eps{config.expert_epsilon};
  eps.insert(eps.end(), config.test_epsilons.begin(), config.test_epsilons.end());
  for (double e : eps) {
    if (inputs.references.count(e)) continue;
    const fs::path ref_file =
        root / "references" /
        ("ref_" + fingerprint + "_eps" + tag(e) + "_steps" +
         std::to_string(config.eval_steps) + "_seed" +
         std::to_string(config.eval_seed) + ".json");
    if (fs::exists(ref_file)) {
      inputs.references[e] = load_references(ref_file.string());
    } else {
      emit(log, "computing reference returns -> " + ref_file.string());
      GridConfig env;
      env.epsilon = e;
      inputs.references[e] = compute_references(inputs.expert, env,
                                                config.eval_steps,
                                                config.eval_seed);
      save_references(inputs.references[e], ref_file.string());
    }
  }
  return inputs;
}

CellResult run_cell(const RunConfig& config, const SweepInputs& inputs,
                    double learner_epsilon, double alpha, std::uint64_t seed,
                    const SweepLog& log) {
  CellResult result;
  TransferRow& t = result.transfer;
  t.learner_epsilon = learner_epsilon;
  t.alpha = alpha;
  t.seed = seed;
  t.run_seed = cell_seed(seed, learner_epsilon, alpha);
  t.deploy_epsilon = config.expert_epsilon;
  for (double e : config.test_epsilons) {
    RobustnessRow r;
    r.learner_epsilon = learner_epsilon;
    r.alpha = alpha;
    r.seed = seed;
    r.run_seed = t.run_seed;
    r.test_epsilon = e;
    r.mean_return = r.std_error = r.cumulative_return = r.normalized_score = kNaN;
    result.robustness.push_back(r);
  }

  const std::string name = cell_name(learner_epsilon, alpha, seed);
  try {
    const fs::path dir = fs::path(config.output_dir) / "cells" / name;
    fs::create_directories(dir);
    const TrainConfig tc =
        make_train_config(config, learner_epsilon, alpha, t.run_seed);

    std::string metrics = metrics_csv_header() + "\n";
    emit(log, "cell " + name + ": training");
    const TrainState state = train_robust_gailfo(
        inputs.demos, tc,
        [&](const MetricsRow& row) { metrics += to_csv_row(row) + "\n"; });
    write_atomic(dir / "metrics.csv", metrics);
    save_policy(state.player, (dir / "policy.json").string());

    GridConfig deploy;
    deploy.epsilon = config.expert_epsilon;
    const EvalReport rep = evaluate_policy(state.player, deploy,
                                           config.eval_steps, config.eval_seed);
    t.steps_evaluated = rep.total_steps_evaluated;
    t.episodes_completed = rep.episodes_completed;
    t.last_truncated = rep.last_truncated;
    t.mean_return = rep.mean_return;
    t.std_error = rep.std_error;
    t.cumulative_return = rep.cumulative_return;
    t.normalized_score =
        inputs.reference(config.expert_epsilon).score(rep.cumulative_return);
    t.goal_fraction = rep.goal_fraction();
    t.ok = true;

    for (RobustnessRow& r : result.robustness) {
      GridConfig env;
      env.epsilon = r.test_epsilon;
      const EvalReport rr = evaluate_policy(state.player, env,
                                            config.eval_steps, config.eval_seed);
      r.steps_evaluated = rr.total_steps_evaluated;
      r.last_truncated = rr.last_truncated;
      r.mean_return = rr.mean_return;
      r.std_error = rr.std_error;
      r.cumulative_return = rr.cumulative_return;
      r.normalized_score =
          inputs.reference(r.test_epsilon).score(rr.cumulative_return);
      r.ok = true;
    }

    write_atomic(dir / "transfer.csv",
                 transfer_csv_header() + "\n" + to_csv_row(t) + "\n");
    std::string rob = robustness_csv_header() + "\n";
    for (const auto& r : result.robustness) rob += to_csv_row(r) + "\n";
    write_atomic(dir / "robustness.csv", rob);
    emit(log, "cell " + name + ": score " + fmt(t.normalized_score));
  } catch (const std::exception& e) {
    t.ok = false;
    t.error = e.what();
    t.steps_evaluated = 0;
    t.episodes_completed = 0;
    t.mean_return = t.std_error = t.cumulative_return = t.normalized_score =
        t.goal_fraction = kNaN;
    for (RobustnessRow& r : result.robustness) {
      r.ok = false;
      r.mean_return = r.std_error = r.cumulative_return = r.normalized_score =
          kNaN;
    }
    emit(log, "cell " + name + ": failed: " + t.error);
  }
  return result;
}

SweepResult run_sweep(const RunConfig& config, const SweepLog& log) {
  config.validate();
  require_distinct_tags(config.learner_epsilons, "learner_epsilons");
  require_distinct_tags(config.alphas, "alphas");

  std::mutex log_mutex;
  const SweepLog safe_log = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    log(msg);
  };

  const SweepInputs inputs = prepare_sweep_inputs(config, safe_log);

  struct Cell {
    double learner_epsilon;
    double alpha;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double e : config.learner_epsilons) {
    for (double a : config.alphas) {
      for (std::uint64_t s : config.seeds) cells.push_back({e, a, s});
    }
  }

  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      results[i] = run_cell(config, inputs, cells[i].learner_epsilon,
                            cells[i].alpha, cells[i].seed, safe_log);
    }
  };
  const int n_workers =
      std::min<int>(config.workers, static_cast<int>(cells.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult out;
  std::string transfer = transfer_csv_header() + "\n";
  std::string robustness = robustness_csv_header() + "\n";
  for (const CellResult& r : results) {
    out.transfer.push_back(r.transfer);
    transfer += to_csv_row(r.transfer) + "\n";
    for (const auto& row : r.robustness) {
      out.robustness.push_back(row);
      robustness += to_csv_row(row) + "\n";
    }
  }
  const fs::path root(config.output_dir);
  write_atomic(root / "transfer.csv", transfer);
  write_atomic(root / "robustness.csv", robustness);
  save_run_config(config, (root / "config.txt").string());
  return out;
}

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::stringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size()) {
        throw std::invalid_argument("csv row has " +
                                    std::to_string(fields.size()) +
                                    " fields, header has " +
                                    std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw std::invalid_argument("csv has no header");
  return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path)); }

double standard_error(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

std::vector<AggregateRow> aggregate(const CsvTable& table) {
  const int c_eps = table.column("learner_epsilon");
  const int c_alpha = table.column("alpha");
  const int c_status = table.column("status");
  const int c_score = table.column("normalized_score");
  const int c_cum = table.column("cumulative_return");
  const int c_test = table.column("test_epsilon");
  if (c_eps < 0 || c_alpha < 0 || c_status < 0 || c_score < 0 || c_cum < 0) {
    throw std::invalid_argument(
        "csv lacks learner_epsilon, alpha, status, normalized_score or "
        "cumulative_return");
  }

  struct Group {
    AggregateRow row;
    std::vector<double> scores;
    std::vector<double> returns;
  };
  std::vector<Group> groups;
  for (const auto& fields : table.rows) {
    AggregateRow key;
    key.learner_epsilon = std::stod(fields[c_eps]);
    key.alpha = std::stod(fields[c_alpha]);
    key.has_test_epsilon = c_test >= 0;
    if (c_test >= 0) key.test_epsilon = std::stod(fields[c_test]);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.row.learner_epsilon == key.learner_epsilon &&
             g.row.alpha == key.alpha && g.row.test_epsilon == key.test_epsilon;
    });
    if (it == groups.end()) {
      groups.push_back({key, {}, {}});
      it = groups.end() - 1;
    }
    if (fields[c_status] == "ok") {
      it->scores.push_back(std::stod(fields[c_score]));
      it->returns.push_back(std::stod(fields[c_cum]));
    } else {
      ++it->row.n_failed;
    }
  }

  std::vector<AggregateRow> out;
  for (Group& g : groups) {
    AggregateRow r = g.row;
    r.n = static_cast<int>(g.scores.size());
    if (r.n > 0) {
      double s = 0.0, c = 0.0;
      for (std::size_t i = 0; i < g.scores.size(); ++i) {
        s += g.scores[i];
        c += g.returns[i];
      }
      r.mean_score = s / r.n;
      r.mean_cumulative_return = c / r.n;
      r.std_error = standard_error(g.scores);
    } else {
      r.mean_score = r.mean_cumulative_return = r.std_error = kNaN;
    }
    out.push_back(r);
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    bool best = out[i].n > 0;
    for (std::size_t j = 0; j < out.size() && best; ++j) {
      if (j == i || out[j].n == 0) continue;
      if (out[j].learner_epsilon != out[i].learner_epsilon ||
          out[j].test_epsilon != out[i].test_epsilon) {
        continue;
      }
      // Ties go to the earlier row.
      if (out[j].mean_score > out[i].mean_score ||
          (out[j].mean_score == out[i].mean_score && j < i)) {
        best = false;
      }
    }
    out[i].best = best;
  }
  return out;
}

std::string aggregate_csv_header(bool with_test_epsilon) {
  return std::string("learner_epsilon,alpha,") +
         (with_test_epsilon ? "test_epsilon," : "") +
         "n,n_failed,mean_score,std_error,mean_cumulative_return,best";
}

std::string to_csv(const std::vector<AggregateRow>& rows) {
  const bool with_test = !rows.empty() && rows.front().has_test_epsilon;
  std::string out = aggregate_csv_header(with_test) + "\n";
  for (const auto& r : rows) {
    out += fmt(r.learner_epsilon) + "," + fmt(r.alpha) + ",";
    if (with_test) out += fmt(r.test_epsilon) + ",";
    out += std::to_string(r.n) + "," + std::to_string(r.n_failed) + "," +
           fmt(r.mean_score) + "," + fmt(r.std_error) + "," +
           fmt(r.mean_cumulative_return) + "," + (r.best ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace rgail
