#include "rgail/tabular_oracle.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rgail::tabular {
namespace {

constexpr double kStochasticTol = 1e-12;

void check_distribution(const Eigen::Ref<const Vector>& row,
                        const std::string& what) {
  if ((row.array() < 0.0).any()) {
    throw std::invalid_argument(what + " has a negative entry");
  }
  if (std::abs(row.sum() - 1.0) > kStochasticTol) {
    throw std::invalid_argument(what + " does not sum to 1");
  }
}

void check_shapes(const TabularMDP& mdp, const TabularPolicy& policy) {
  if (policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("policy shape does not match the MDP");
  }
}

Vector dirichlet_ones(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = expo(rng);
  return v / v.sum();
}

}  // namespace

TabularMDP::TabularMDP(int n_states, int n_actions, double discount)
    : n_states_(n_states),
      n_actions_(n_actions),
      discount_(discount),
      transition_(n_actions > 0 ? n_actions : 0,
                  Matrix::Zero(n_states > 0 ? n_states : 0,
                               n_states > 0 ? n_states : 0)),
      initial_dist_(Vector::Zero(n_states > 0 ? n_states : 0)),
      cost_(Matrix::Zero(n_states > 0 ? n_states : 0,
                         n_states > 0 ? n_states : 0)) {
  if (n_states <= 0 || n_actions <= 0) {
    throw std::invalid_argument("TabularMDP needs positive state/action counts");
  }
  if (!(discount > 0.0 && discount < 1.0)) {
    throw std::invalid_argument("discount must lie in (0, 1)");
  }
}

void TabularMDP::validate() const {
  if (!(discount_ > 0.0 && discount_ < 1.0)) {
    throw std::invalid_argument("discount must lie in (0, 1)");
  }
  for (int a = 0; a < n_actions_; ++a) {
    for (int s = 0; s < n_states_; ++s) {
      check_distribution(transition_[a].row(s).transpose(),
                         "transition row");
    }
  }
  check_distribution(initial_dist_, "initial distribution");
  if (!cost_.allFinite()) throw std::invalid_argument("cost is not finite");
}

void TabularPolicy::validate() const {
  for (int s = 0; s < n_states(); ++s) {
    check_distribution(probs.row(s).transpose(), "policy row");
  }
}

Matrix state_kernel(const TabularMDP& mdp, const TabularPolicy& policy) {
  check_shapes(mdp, policy);
  const int n = mdp.n_states();
  Matrix p = Matrix::Zero(n, n);
  for (int a = 0; a < mdp.n_actions(); ++a) {
    p += policy.probs.col(a).asDiagonal() * mdp.kernel(a);
  }
  return p;
}

PolicyValue policy_evaluation(const TabularMDP& mdp,
                              const TabularPolicy& policy) {
  const Matrix p = state_kernel(mdp, policy);
  const int n = mdp.n_states();
  const Vector r = p.cwiseProduct(mdp.cost()).rowwise().sum();
  const Matrix system = Matrix::Identity(n, n) - mdp.discount() * p;
  PolicyValue out;
  out.value_per_state = system.fullPivLu().solve(r);
  out.expected_cost = mdp.initial_dist().dot(out.value_per_state);
  return out;
}

Matrix occupancy_measure(const TabularMDP& mdp, const TabularPolicy& policy) {
  const Matrix p = state_kernel(mdp, policy);
  const int n = mdp.n_states();
  const Matrix system =
      Matrix::Identity(n, n) - mdp.discount() * p.transpose();
  const Vector d = system.fullPivLu().solve(mdp.initial_dist());
  return d.asDiagonal() * p;
}

TabularMDP apply_uncertainty(const TabularMDP& mdp, double alpha,
                             const TabularPolicy& opponent) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1]");
  }
  const Matrix averaged = state_kernel(mdp, opponent);
  TabularMDP out = mdp;
  for (int a = 0; a < mdp.n_actions(); ++a) {
    out.kernel(a) = alpha * mdp.kernel(a) + (1.0 - alpha) * averaged;
  }
  return out;
}

TabularPolicy mix_policies(const TabularPolicy& player,
                           const TabularPolicy& opponent, double alpha) {
  if (player.probs.rows() != opponent.probs.rows() ||
      player.probs.cols() != opponent.probs.cols()) {
    throw std::invalid_argument("policy shapes differ");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1]");
  }
  return TabularPolicy{alpha * player.probs + (1.0 - alpha) * opponent.probs};
}

EquivalenceReport verify_equivalence(const TabularMDP& mdp,
                                     const TabularPolicy& player,
                                     const TabularPolicy& opponent,
                                     double alpha) {
  mdp.validate();
  player.validate();
  opponent.validate();
  check_shapes(mdp, player);
  check_shapes(mdp, opponent);

  const TabularPolicy mixed = mix_policies(player, opponent, alpha);
  const TabularMDP perturbed = apply_uncertainty(mdp, alpha, opponent);

  EquivalenceReport report;
  report.cost_diff = std::abs(policy_evaluation(mdp, mixed).expected_cost -
                              policy_evaluation(perturbed, player).expected_cost);
  report.occupancy_diff = (occupancy_measure(mdp, mixed) -
                           occupancy_measure(perturbed, player))
                              .cwiseAbs()
                              .maxCoeff();
  return report;
}

TabularMDP random_mdp(int n_states, int n_actions, double discount,
                      std::mt19937_64& rng) {
  TabularMDP mdp(n_states, n_actions, discount);
  for (int a = 0; a < n_actions; ++a) {
    for (int s = 0; s < n_states; ++s) {
      mdp.kernel(a).row(s) = dirichlet_ones(n_states, rng).transpose();
    }
  }
  mdp.initial_dist() = dirichlet_ones(n_states, rng);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < n_states; ++s) {
    for (int t = 0; t < n_states; ++t) mdp.cost()(s, t) = unif(rng);
  }
  return mdp;
}

TabularPolicy random_policy(int n_states, int n_actions, std::mt19937_64& rng) {
  TabularPolicy pi{Matrix(n_states, n_actions)};
  for (int s = 0; s < n_states; ++s) {
    pi.probs.row(s) = dirichlet_ones(n_actions, rng).transpose();
  }
  return pi;
}

std::string to_json(const TabularMDP& mdp) {
  using nlohmann::json;
  json doc;
  doc["format_version"] = 1;
  doc["n_states"] = mdp.n_states();
  doc["n_actions"] = mdp.n_actions();
  doc["discount"] = mdp.discount();
  json transition = json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    json per_action = json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) {
      json row = json::array();
      for (int t = 0; t < mdp.n_states(); ++t) row.push_back(mdp.transition(s, a, t));
      per_action.push_back(std::move(row));
    }
    transition.push_back(std::move(per_action));
  }
  doc["transition"] = std::move(transition);
  doc["initial_dist"] = std::vector<double>(
      mdp.initial_dist().data(),
      mdp.initial_dist().data() + mdp.initial_dist().size());
  json cost = json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    json row = json::array();
    for (int t = 0; t < mdp.n_states(); ++t) row.push_back(mdp.cost()(s, t));
    cost.push_back(std::move(row));
  }
  doc["cost"] = std::move(cost);
  return doc.dump();
}

TabularMDP mdp_from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  if (doc.value("format_version", 0) != 1) {
    throw std::invalid_argument("unsupported tabular MDP format version");
  }
  const int ns = doc.at("n_states").get<int>();
  const int na = doc.at("n_actions").get<int>();
  TabularMDP mdp(ns, na, doc.at("discount").get<double>());
  const auto& transition = doc.at("transition");
  const auto& cost = doc.at("cost");
  const auto& init = doc.at("initial_dist");
  if (static_cast<int>(transition.size()) != ns ||
      static_cast<int>(cost.size()) != ns ||
      static_cast<int>(init.size()) != ns) {
    throw std::invalid_argument("tabular MDP arrays have the wrong length");
  }
  for (int s = 0; s < ns; ++s) {
    if (static_cast<int>(transition[s].size()) != na) {
      throw std::invalid_argument("transition has the wrong action count");
    }
    for (int a = 0; a < na; ++a) {
      if (static_cast<int>(transition[s][a].size()) != ns) {
        throw std::invalid_argument("transition row has the wrong length");
      }
      for (int t = 0; t < ns; ++t) {
        mdp.set_transition(s, a, t, transition[s][a][t].get<double>());
      }
    }
    if (static_cast<int>(cost[s].size()) != ns) {
      throw std::invalid_argument("cost row has the wrong length");
    }
    for (int t = 0; t < ns; ++t) mdp.cost()(s, t) = cost[s][t].get<double>();
    mdp.initial_dist()(s) = init[s].get<double>();
  }
  mdp.validate();
  return mdp;
}

void save_mdp(const TabularMDP& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(mdp) << '\n';
}

TabularMDP load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return mdp_from_json(buf.str());
}

}  // namespace rgail::tabular
