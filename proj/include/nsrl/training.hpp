#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nsrl/building.hpp"
#include "nsrl/ddt.hpp"
#include "nsrl/lnn.hpp"
#include "nsrl/toy_hvac.hpp"
#include "nsrl/types.hpp"

namespace nsrl::training {

// Precooling rule-based controller: coast at a high setpoint while power
// is expensive, precool ahead of an expensive stretch, hold normal
// otherwise.
struct RbcController {
    double price_threshold = 1.5;
    double setpoint_high = 30.0, setpoint_precool = 15.0, setpoint_normal = 20.0;

    double act(double p_cur, double p_fut) const {
        if (p_cur > price_threshold) return setpoint_high;
        if (p_fut > price_threshold) return setpoint_precool;
        return setpoint_normal;
    }
};

inline double rbc_act(double p_cur, double p_fut) { return RbcController{}.act(p_cur, p_fut); }

sim::Controller make_rbc_controller();
sim::Controller make_ddt_controller(const ddt::Ddt<double>& tree, const std::string& name);
sim::Controller make_ddt_crisp_controller(const ddt::Ddt<double>& tree, const std::string& name);

// One-hidden-layer tanh network mapped onto the setpoint interval through
// a sigmoid output.
struct Mlp {
    MatD w1;
    VecD b1;
    MatD w2;
    VecD b2;
};

Mlp random_mlp(int inputs, int hidden, std::mt19937& rng);
double mlp_act(const Mlp& m, const VecD& obs);
sim::Controller make_mlp_controller(const Mlp& m, const std::string& name);
VecD mlp_flatten(const Mlp& m);
Mlp mlp_unflatten(const Mlp& proto, const VecD& params);
std::string mlp_to_json(const Mlp& m);
Mlp mlp_from_json(const std::string& text);

struct TrainLogRow {
    int episode;
    double cost;
    double regularizer;
    double residual;
    double max_dist;
};

std::string train_log_to_csv(const std::vector<TrainLogRow>& log);

struct Crispness {
    double max_dist = 0.0;
    double mean_dist = 0.0;
};

// Distance of each weight to its nearest integer.
Crispness crispness_report(std::span<const double> weights);
std::vector<double> ddt_weight_values(const ddt::Ddt<double>& t);
std::vector<double> lnn_weight_values(const lnn::Formula<double>& f);

struct CemConfig {
    int population = 32;
    int elites = 8;
    int iterations = 20;
    double init_std = 0.5;
    double std_floor = 0.02;
    uint64_t seed = 1;
    int reg_p = 8;
    double reg_lambda = 0.0;
};

struct CemResult {
    ddt::Ddt<double> policy;
    std::vector<TrainLogRow> log;
    double initial_cost = 0.0;
    double best_cost = 0.0;
};

// Cross-entropy search over all learnable tree parameters (weights,
// thresholds, log-sharpness, leaf logits).  Scores are episode cost plus
// the integer regularizer; the best-seen policy is returned.
CemResult train_cem(const sim::EnvConfig& env, int month, const ddt::Ddt<double>& init,
                    const CemConfig& cfg);

// Generic CEM used for the MLP baseline.
VecD cem_optimize(const VecD& mean0, const CemConfig& cfg,
                  const std::function<double(const VecD&)>& score,
                  std::vector<TrainLogRow>* log = nullptr);

struct PgConfig {
    double lr = 1e-4;
    double explore_std = 0.5;
    int episodes = 200;
    uint64_t seed = 1;
    int reg_p = 8;
    double reg_lambda = 0.0;
};

struct PgResult {
    ddt::Ddt<double> policy;  // best seen
    ddt::Ddt<double> final_policy;
    std::vector<TrainLogRow> log;
    double initial_cost = 0.0;
    double best_cost = 0.0;
};

// Episodic REINFORCE with Gaussian exploration on the soft action and a
// moving-average baseline; the regularizer gradient flows through the
// tape exactly.
PgResult train_pg(const sim::EnvConfig& env, int month, const ddt::Ddt<double>& init,
                  const PgConfig& cfg);

struct DpcConfig {
    int episodes = 100;
    int warmup_episodes = 30;  // annealing starts after these
    double lr = 0.15;
    double max_step = 0.05;    // per-parameter step clip
    double eta = 1.15;         // per-episode sharpness multiplier
    double kappa0 = 2.0;       // initial grounding sharpness
    double gate_sharpness0 = 2.0;
    double sharpness_max = 200.0;
    double penalty = 2.0;  // constraint penalty weight
    double crisp_tol = lnn::kActiveWeightTol;
    int polish_episodes = 40;      // bias-only settling after selection
    int validation_rollouts = 64;  // crisp rollouts per ablation candidate
    uint64_t seed = 1;
    double hot_threshold = 1.9;
    double cheap_threshold = 5.0;
};

struct DpcResult {
    lnn::Formula<double> policy;  // soft, annotated
    lnn::Formula<double> crisp;   // valid when crisp_ok
    bool crisp_ok = false;
    std::string crisp_error;
    std::vector<TrainLogRow> log;
};

// Differentiable predictive control: unroll the full toy episode on one
// tape, descend total cost plus the constraint penalty, and anneal both
// grounding and gate sharpness by eta each episode (after a smooth warmup
// window).  The policy template must be Implies(antecedent, Control(x));
// the control signal is the antecedent's truth value.
//
// The episode loop settles the behavior but cannot pin uninformative
// inputs to exact zero: once the sigmoids saturate, the crisp policy is
// invariant to weight scale, so descent leaves them at fractional values.
// A best-first ablation pass therefore selects the crisp structure by
// seeded validation rollouts, survivors snap to weight one, and a short
// bias-only polish restores the semantics constraints.
DpcResult train_dpc(const sim::ToyConfig& toy, sim::ToyScenario scenario,
                    const lnn::Formula<double>& tmpl, const DpcConfig& cfg);

// Crisp rollout of a crisp policy; returns the per-step control decisions.
struct ToyTrajectory {
    std::vector<double> temp;       // temperature after each step
    std::vector<double> u;          // control taken
    std::vector<double> price;
    std::vector<double> step_cost;
    double total_cost = 0.0;
};

ToyTrajectory rollout_crisp(const lnn::Formula<double>& crisp, const sim::ToyConfig& toy,
                            sim::ToyScenario scenario, const DpcConfig& cfg);

std::string toy_trajectory_to_csv(const ToyTrajectory& t);

struct CostTable {
    std::vector<std::string> controllers;
    std::vector<int> months;
    MatD cost;  // controllers x months

    std::string to_csv() const;
};

CostTable evaluate_controllers(const sim::EnvConfig& env,
                               const std::vector<sim::Controller>& controllers,
                               const std::vector<int>& months);

}  // namespace nsrl::training
