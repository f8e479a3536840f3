#ifndef RGAIL_TABULAR_ORACLE_H_
#define RGAIL_TABULAR_ORACLE_H_

// Exact finite-MDP computations. Everything here is solved with dense
// direct factorizations and is meant to serve as ground truth for the
// sampled machinery elsewhere in the library.

#include <Eigen/Dense>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace rgail::tabular {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Finite MDP with a cost defined on consecutive state pairs.
// transition(s, a, s') is stored as one |S| x |S| matrix per action.
class TabularMDP {
 public:
  TabularMDP(int n_states, int n_actions, double discount);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double discount() const { return discount_; }

  double transition(int s, int a, int next) const {
    return transition_[a](s, next);
  }
  void set_transition(int s, int a, int next, double p) {
    transition_[a](s, next) = p;
  }
  // |S| x |S| kernel of action a; row s is T(. | s, a).
  const Matrix& kernel(int a) const { return transition_[a]; }
  Matrix& kernel(int a) { return transition_[a]; }

  const Vector& initial_dist() const { return initial_dist_; }
  Vector& initial_dist() { return initial_dist_; }
  const Matrix& cost() const { return cost_; }
  Matrix& cost() { return cost_; }

  // Throws std::invalid_argument when a row is not a distribution
  // (tolerance 1e-12) or the discount is outside (0, 1).
  void validate() const;

 private:
  int n_states_;
  int n_actions_;
  double discount_;
  std::vector<Matrix> transition_;
  Vector initial_dist_;
  Matrix cost_;
};

// Stationary stochastic policy, probs(s, a).
struct TabularPolicy {
  Matrix probs;

  int n_states() const { return static_cast<int>(probs.rows()); }
  int n_actions() const { return static_cast<int>(probs.cols()); }
  void validate() const;
};

struct PolicyValue {
  Vector value_per_state;
  double expected_cost = 0.0;
};

// Markov chain P_pi(s, s') = sum_a pi(a|s) T(s'|s, a).
Matrix state_kernel(const TabularMDP& mdp, const TabularPolicy& policy);

// Solves V = r_pi + gamma P_pi V directly.
PolicyValue policy_evaluation(const TabularMDP& mdp,
                              const TabularPolicy& policy);

// rho(s, s') = d(s) P_pi(s, s') with d = P0 + gamma P_pi^T d.
// Total mass is 1 / (1 - gamma).
Matrix occupancy_measure(const TabularMDP& mdp, const TabularPolicy& policy);

// T^alpha(s'|s,a) = alpha T(s'|s,a) + (1-alpha) sum_b opp(b|s) T(s'|s,b).
TabularMDP apply_uncertainty(const TabularMDP& mdp, double alpha,
                             const TabularPolicy& opponent);

TabularPolicy mix_policies(const TabularPolicy& player,
                           const TabularPolicy& opponent, double alpha);

struct EquivalenceReport {
  double cost_diff = 0.0;       // |J_mix - J_uncertain|
  double occupancy_diff = 0.0;  // max_{s,s'} |rho_mix - rho_uncertain|

  double max_abs_diff() const { return std::max(cost_diff, occupancy_diff); }
};

// Compares the player running under the mixed policy in the nominal MDP
// against the player alone in the opponent-perturbed kernel.
EquivalenceReport verify_equivalence(const TabularMDP& mdp,
                                     const TabularPolicy& player,
                                     const TabularPolicy& opponent,
                                     double alpha);

// Random instances: Dirichlet(1,...,1) rows, uniform[-1, 1] costs.
TabularMDP random_mdp(int n_states, int n_actions, double discount,
                      std::mt19937_64& rng);
TabularPolicy random_policy(int n_states, int n_actions, std::mt19937_64& rng);

// JSON fixtures. Arrays are row-major; transition is nested [s][a][s'].
std::string to_json(const TabularMDP& mdp);
TabularMDP mdp_from_json(const std::string& text);
void save_mdp(const TabularMDP& mdp, const std::string& path);
TabularMDP load_mdp(const std::string& path);

}  // namespace rgail::tabular

#endif  // RGAIL_TABULAR_ORACLE_H_
