#include "nsrl/training.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "nsrl/grounding.hpp"
#include "nsrl/io.hpp"

namespace nsrl::training {

using nlohmann::json;

sim::Controller make_rbc_controller() {
    return {"RBC", sim::ObsProfile::Rbc, [](const VecD& o) { return rbc_act(o(0), o(1)); }};
}

sim::Controller make_ddt_controller(const ddt::Ddt<double>& tree, const std::string& name) {
    return {name, sim::ObsProfile::Ddt,
            [tree](const VecD& o) { return ddt::soft_action(tree, o); }};
}

sim::Controller make_ddt_crisp_controller(const ddt::Ddt<double>& tree, const std::string& name) {
    return {name, sim::ObsProfile::Ddt,
            [tree](const VecD& o) { return ddt::crisp_action(tree, o); }};
}

Mlp random_mlp(int inputs, int hidden, std::mt19937& rng) {
    std::normal_distribution<double> normal(0.0, 0.3);
    Mlp m;
    m.w1 = MatD::Zero(hidden, inputs);
    m.b1 = VecD::Zero(hidden);
    m.w2 = MatD::Zero(1, hidden);
    m.b2 = VecD::Zero(1);
    for (int i = 0; i < hidden; ++i)
        for (int j = 0; j < inputs; ++j) m.w1(i, j) = normal(rng);
    for (int i = 0; i < hidden; ++i) m.w2(0, i) = normal(rng);
    return m;
}

double mlp_act(const Mlp& m, const VecD& obs) {
    const VecD h = (m.w1 * obs + m.b1).array().tanh();
    const double z = (m.w2 * h + m.b2)(0);
    return sim::kSetpointMin + (sim::kSetpointMax - sim::kSetpointMin) * sigmoid(z);
}

sim::Controller make_mlp_controller(const Mlp& m, const std::string& name) {
    return {name, sim::ObsProfile::Full, [m](const VecD& o) { return mlp_act(m, o); }};
}

VecD mlp_flatten(const Mlp& m) {
    VecD out(m.w1.size() + m.b1.size() + m.w2.size() + m.b2.size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m.w1.size(); ++i) out(k++) = m.w1.data()[i];
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) out(k++) = m.b1(i);
    for (Eigen::Index i = 0; i < m.w2.size(); ++i) out(k++) = m.w2.data()[i];
    for (Eigen::Index i = 0; i < m.b2.size(); ++i) out(k++) = m.b2(i);
    return out;
}

Mlp mlp_unflatten(const Mlp& proto, const VecD& params) {
    Mlp m = proto;
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = params(k++);
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1(i) = params(k++);
    for (Eigen::Index i = 0; i < m.w2.size(); ++i) m.w2.data()[i] = params(k++);
    for (Eigen::Index i = 0; i < m.b2.size(); ++i) m.b2(i) = params(k++);
    if (k != params.size()) throw UsageError("mlp_unflatten: parameter count mismatch");
    return m;
}

std::string mlp_to_json(const Mlp& m) {
    auto mat = [](const MatD& a) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
            rows.push_back(row);
        }
        return rows;
    };
    json j;
    j["schema_version"] = 1;
    j["w1"] = mat(m.w1);
    j["b1"] = std::vector<double>(m.b1.data(), m.b1.data() + m.b1.size());
    j["w2"] = mat(m.w2);
    j["b2"] = std::vector<double>(m.b2.data(), m.b2.data() + m.b2.size());
    return j.dump(2) + "\n";
}

Mlp mlp_from_json(const std::string& text) {
    json j = json::parse(text);
    auto mat = [](const json& rows) {
        MatD a(rows.size(), rows.empty() ? 0 : rows[0].size());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index jx = 0; jx < a.cols(); ++jx)
                a(i, jx) = rows[static_cast<size_t>(i)][static_cast<size_t>(jx)].get<double>();
        return a;
    };
    Mlp m;
    m.w1 = mat(j.at("w1"));
    auto b1 = j.at("b1").get<std::vector<double>>();
    m.b1 = Eigen::Map<VecD>(b1.data(), static_cast<Eigen::Index>(b1.size()));
    m.w2 = mat(j.at("w2"));
    auto b2 = j.at("b2").get<std::vector<double>>();
    m.b2 = Eigen::Map<VecD>(b2.data(), static_cast<Eigen::Index>(b2.size()));
    return m;
}

std::string train_log_to_csv(const std::vector<TrainLogRow>& log) {
    io::Csv csv({"episode", "cost", "regularizer", "residual", "max_dist"});
    for (const auto& r : log)
        csv.add_row({io::csv_field(r.episode), io::csv_field(r.cost),
                     io::csv_field(r.regularizer), io::csv_field(r.residual),
                     io::csv_field(r.max_dist)});
    return csv.text();
}

Crispness crispness_report(std::span<const double> weights) {
    Crispness c;
    if (weights.empty()) return c;
    double sum = 0.0;
    for (double w : weights) {
        const double d = std::abs(w - std::round(w));
        c.max_dist = std::max(c.max_dist, d);
        sum += d;
    }
    c.mean_dist = sum / static_cast<double>(weights.size());
    return c;
}

std::vector<double> ddt_weight_values(const ddt::Ddt<double>& t) {
    std::vector<double> out;
    for (const auto& n : t.nodes)
        for (Eigen::Index j = 0; j < n.w.size(); ++j) out.push_back(n.w(j));
    return out;
}

namespace {
void collect_lnn_weights(const lnn::Gate<double>& g, std::vector<double>& out) {
    if (g.has_params())
        for (Eigen::Index j = 0; j < g.weights.size(); ++j) out.push_back(g.weights(j));
    for (const auto& c : g.children) collect_lnn_weights(c, out);
}
}  // namespace

std::vector<double> lnn_weight_values(const lnn::Formula<double>& f) {
    std::vector<double> out;
    collect_lnn_weights(f.root, out);
    return out;
}

VecD cem_optimize(const VecD& mean0, const CemConfig& cfg,
                  const std::function<double(const VecD&)>& score,
                  std::vector<TrainLogRow>* log) {
    if (cfg.population < 2 || cfg.elites < 1 || cfg.elites > cfg.population)
        throw ConfigError("cem: bad population/elite sizes");
    std::mt19937 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    VecD mean = mean0;
    VecD stddev = VecD::Constant(mean.size(), cfg.init_std);
    VecD best = mean0;
    double best_score = score(mean0);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        MatD samples(cfg.population, mean.size());
        VecD scores(cfg.population);
        for (int k = 0; k < cfg.population; ++k) {
            VecD x(mean.size());
            for (Eigen::Index i = 0; i < mean.size(); ++i)
                x(i) = mean(i) + stddev(i) * normal(rng);
            samples.row(k) = x.transpose();
            scores(k) = score(x);
            if (scores(k) < best_score) {
                best_score = scores(k);
                best = x;
            }
        }
        std::vector<int> order(static_cast<size_t>(cfg.population));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return scores(a) < scores(b); });

        VecD new_mean = VecD::Zero(mean.size());
        for (int e = 0; e < cfg.elites; ++e) new_mean += samples.row(order[static_cast<size_t>(e)]);
        new_mean /= cfg.elites;
        VecD var = VecD::Zero(mean.size());
        for (int e = 0; e < cfg.elites; ++e) {
            const VecD d = samples.row(order[static_cast<size_t>(e)]).transpose() - new_mean;
            var += d.cwiseProduct(d);
        }
        mean = new_mean;
        stddev = (var / cfg.elites).cwiseSqrt().cwiseMax(cfg.std_floor);

        if (log) log->push_back({iter, best_score, 0.0, 0.0, 0.0});
    }
    return best;
}

namespace {

double ddt_episode_cost(const sim::EnvConfig& env, int month, const ddt::Ddt<double>& tree) {
    return sim::run_episode(env, make_ddt_controller(tree, "ddt"), month).total_cost;
}

}  // namespace

CemResult train_cem(const sim::EnvConfig& env, int month, const ddt::Ddt<double>& init,
                    const CemConfig& cfg) {
    const VecD mean0 = ddt::flatten(init);
    auto score = [&](const VecD& params) {
        const ddt::Ddt<double> tree = ddt::unflatten(init, params);
        return ddt_episode_cost(env, month, tree) +
               ddt::integer_regularizer(tree, cfg.reg_p, cfg.reg_lambda);
    };

    CemResult out;
    out.initial_cost = ddt_episode_cost(env, month, init);
    std::vector<TrainLogRow> log;
    const VecD best = cem_optimize(mean0, cfg, score, &log);
    out.policy = ddt::unflatten(init, best);
    out.best_cost = ddt_episode_cost(env, month, out.policy);

    for (auto& row : log) {
        const auto weights = ddt_weight_values(out.policy);
        row.max_dist = crispness_report(weights).max_dist;
    }
    out.log = std::move(log);
    return out;
}

PgResult train_pg(const sim::EnvConfig& env, int month, const ddt::Ddt<double>& init,
                  const PgConfig& cfg) {
    env.validate();
    std::mt19937 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    PgResult out;
    out.policy = init;
    out.final_policy = init;
    out.initial_cost = ddt_episode_cost(env, month, init);
    out.best_cost = out.initial_cost;

    double baseline = 0.0;
    bool baseline_set = false;
    const int steps_per_day = static_cast<int>(24.0 / env.thermal.dt_hours);
    const int total_steps = env.days * steps_per_day;
    const double var2 = cfg.explore_std * cfg.explore_std;

    for (int episode = 0; episode < cfg.episodes; ++episode) {
        ad::Tape tape;
        ddt::Ddt<ad::Var> lifted = ddt::lift(out.final_policy, tape);

        sim::BuildingState s;
        s.t_in = env.comfort.center;
        s.t_out = env.weather.outdoor(month, 0.0);

        ad::Var loglik_sq(0.0);  // sum of (a - mu)^2
        double episode_cost = 0.0;
        for (int t = 0; t < total_steps; ++t) {
            const VecD obs = sim::observe(s, sim::ObsProfile::Ddt, env);
            ad::Var mu = ddt::soft_action(lifted, obs);
            double a = mu.value();
            if (cfg.explore_std > 0.0) a += cfg.explore_std * noise(rng);
            ad::Var d = ad::Var(a) - mu;
            loglik_sq = loglik_sq + d * d;

            const double applied = std::clamp(a, sim::kSetpointMin, sim::kSetpointMax);
            const auto step = sim::building_step(s, applied, env, month);
            episode_cost += -step.reward;
            s = step.state;
        }
        if (!std::isfinite(episode_cost))
            throw TrainingError("train_pg: episode cost diverged (NaN/inf)");
        if (!baseline_set) {
            baseline = episode_cost;
            baseline_set = true;
        }

        const double advantage = episode_cost - baseline;
        // minimize E[cost]: surrogate combines the score-weighted
        // log-likelihood with the exact regularizer gradient
        const double ll_coeff = var2 > 0.0 ? -advantage / (2.0 * var2) : 0.0;
        ad::Var reg = ddt::integer_regularizer(lifted, cfg.reg_p, cfg.reg_lambda);
        ad::Var surrogate = ad::Var(ll_coeff) * loglik_sq + reg;
        tape.backward(surrogate);

        VecD grads;
        ddt::read_gradients(lifted, grads);
        VecD params = ddt::flatten(out.final_policy);
        params -= cfg.lr * grads;
        out.final_policy = ddt::unflatten(out.final_policy, params);

        baseline = 0.9 * baseline + 0.1 * episode_cost;

        const double det_cost = ddt_episode_cost(env, month, out.final_policy);
        if (det_cost < out.best_cost) {
            out.best_cost = det_cost;
            out.policy = out.final_policy;
        }
        const double reg_val =
            ddt::integer_regularizer(out.final_policy, cfg.reg_p, cfg.reg_lambda);
        const auto weights = ddt_weight_values(out.final_policy);
        out.log.push_back(
            {episode, det_cost, reg_val, 0.0, crispness_report(weights).max_dist});
    }
    return out;
}

namespace {

struct ToyPredicates {
    grounding::VocabEntry hot;
    grounding::VocabEntry cheap;
};

ToyPredicates make_toy_predicates(const DpcConfig& cfg) {
    grounding::VocabEntry hot;
    hot.name = "Hot";
    hot.attribute = "temperature";
    hot.cmp = grounding::Cmp::Gt;
    hot.threshold = cfg.hot_threshold;

    grounding::VocabEntry cheap;
    cheap.name = "PowerCheap";
    cheap.attribute = "price";
    cheap.cmp = grounding::Cmp::Lt;
    cheap.threshold = cfg.cheap_threshold;
    return {hot, cheap};
}

void check_policy_template(const lnn::Formula<double>& f) {
    if (f.root.kind != lnn::GateKind::Implies || f.root.children.size() != 2 ||
        f.root.children[1].kind != lnn::GateKind::Pred)
        throw UsageError(
            "dpc policy: template must be Implies(antecedent, Control(x)) with a predicate "
            "consequent");
}

}  // namespace

namespace {

// One crisp rollout with the given per-step truth draws for ungrounded
// predicates.
double crisp_rollout_cost(const lnn::Formula<double>& crisp, const sim::ToyConfig& toy,
                          const VecD& prices, const ToyPredicates& preds, std::mt19937& rng) {
    std::bernoulli_distribution coin(0.5);
    const bool has_rule = crisp.root.kind == lnn::GateKind::Implies;
    double temp = toy.start_temp, total = 0.0;
    for (int t = 0; t < toy.horizon; ++t) {
        std::map<std::string, bool> bindings;
        bindings["Hot"] = temp > preds.hot.threshold;
        bindings["PowerCheap"] = prices(t) < preds.cheap.threshold;
        for (const auto& name : lnn::predicates(crisp))
            if (!bindings.count(name)) bindings[name] = coin(rng);
        // a rule whose antecedent was pruned away is an unconditional policy
        const double u =
            !has_rule || lnn::evaluate_classical(crisp.root.children[0], bindings) ? 1.0 : 0.0;
        const auto step = sim::toy_step(temp, u, prices(t), toy);
        temp = value_of(step.temp);
        total += value_of(step.cost);
    }
    return total;
}

double validation_cost(const lnn::Formula<double>& masked, const sim::ToyConfig& toy,
                       const VecD& prices, const ToyPredicates& preds, const DpcConfig& cfg) {
    const lnn::Formula<double> crisp = lnn::crispen_formula(masked, 0.5);
    std::mt19937 rng(cfg.seed + 1);  // same stream for every candidate
    double sum = 0.0;
    for (int r = 0; r < cfg.validation_rollouts; ++r)
        sum += crisp_rollout_cost(crisp, toy, prices, preds, rng);
    return sum / cfg.validation_rollouts;
}

struct ChildRef {
    lnn::Gate<double>* gate;
    Eigen::Index child;
    double soft_weight;
};

void collect_child_refs(lnn::Gate<double>& g, bool is_implies_root, std::vector<ChildRef>& out) {
    if (g.has_params()) {
        for (Eigen::Index j = 0; j < g.weights.size(); ++j) {
            // never ablate the consequent of the policy rule
            if (is_implies_root && j == 1) continue;
            out.push_back({&g, j, g.weights(j)});
        }
    }
    for (auto& c : g.children) collect_child_refs(c, false, out);
}

}  // namespace

DpcResult train_dpc(const sim::ToyConfig& toy, sim::ToyScenario scenario,
                    const lnn::Formula<double>& tmpl, const DpcConfig& cfg) {
    check_policy_template(tmpl);
    const ToyPredicates preds = make_toy_predicates(cfg);
    const VecD prices = sim::toy_price_path(scenario, toy);
    std::mt19937 rng(cfg.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    DpcResult out;
    out.policy = tmpl;
    out.policy.sharpness = cfg.gate_sharpness0;
    double kappa = cfg.kappa0;

    auto episode_pass = [&](bool thetas_only) {
        ad::Tape tape;
        lnn::Formula<ad::Var> lifted = lnn::lift(out.policy, tape);
        const lnn::Gate<ad::Var>& antecedent = lifted.root.children[0];

        ad::Var temp(toy.start_temp);
        ad::Var total(0.0);
        for (int t = 0; t < toy.horizon; ++t) {
            std::map<std::string, ad::Var> bindings;
            bindings.emplace("Hot", grounding::soft_compare(preds.hot, kappa, temp));
            bindings.emplace("PowerCheap",
                             grounding::soft_compare(preds.cheap, kappa, ad::Var(prices(t))));
            for (const auto& name : lnn::predicates(out.policy)) {
                if (bindings.count(name)) continue;
                if (name == out.policy.root.children[1].pred) continue;  // consequent
                bindings.emplace(name, ad::Var(uniform(rng)));  // fake predicate
            }
            ad::Var u = lnn::evaluate_gate(antecedent, lifted.sharpness, bindings);
            const auto step = sim::toy_step(temp, u, prices(t), toy);
            temp = step.temp;
            total = total + step.cost;
        }
        ad::Var loss = total + ad::Var(cfg.penalty) * lnn::constraint_residual(lifted);
        tape.backward(loss);

        auto clip = [&](double d) { return std::clamp(d, -cfg.max_step, cfg.max_step); };
        lnn::ParamRefs<ad::Var> vslots = lnn::params(lifted);
        lnn::ParamRefs<double> slots = lnn::params(out.policy);
        if (!thetas_only) {
            for (size_t i = 0; i < slots.weights.size(); ++i) {
                double w = *slots.weights[i] + clip(-cfg.lr * vslots.weights[i]->grad());
                *slots.weights[i] = std::clamp(w, 0.0, 1.0);
            }
        }
        for (size_t i = 0; i < slots.thetas.size(); ++i)
            *slots.thetas[i] += clip(-cfg.lr * vslots.thetas[i]->grad());
        return total.value();
    };

    for (int episode = 0; episode < cfg.episodes; ++episode) {
        const double cost = episode_pass(false);
        if (!std::isfinite(cost)) throw TrainingError("train_dpc: episode cost diverged");
        const double residual = lnn::constraint_residual(out.policy);
        const auto weights = lnn_weight_values(out.policy);
        out.log.push_back({episode, cost, 0.0, residual, crispness_report(weights).max_dist});
        if (episode >= cfg.warmup_episodes) {
            kappa = std::min(kappa * cfg.eta, cfg.sharpness_max);
            out.policy.sharpness = std::min(out.policy.sharpness * cfg.eta, cfg.sharpness_max);
        }
    }

    // Structure selection: round the weights to {0,1}, then best-first
    // ablation scored by seeded crisp validation rollouts.
    lnn::Formula<double> masked = out.policy;
    {
        std::vector<ChildRef> soft_refs;
        collect_child_refs(masked.root, true, soft_refs);
        for (auto& ref : soft_refs)
            ref.gate->weights(ref.child) = std::round(ref.gate->weights(ref.child));

        double best = validation_cost(masked, toy, prices, preds, cfg);
        for (;;) {
            std::vector<ChildRef> refs;
            collect_child_refs(masked.root, true, refs);
            double round_best = best;
            const ChildRef* round_pick = nullptr;
            for (const auto& ref : refs) {
                if (ref.gate->weights(ref.child) == 0.0) continue;
                ref.gate->weights(ref.child) = 0.0;
                const double v = validation_cost(masked, toy, prices, preds, cfg);
                ref.gate->weights(ref.child) = 1.0;
                if (v <= round_best + 1e-9) {
                    round_best = v;
                    round_pick = &ref;
                }
            }
            if (!round_pick) break;
            round_pick->gate->weights(round_pick->child) = 0.0;
            best = round_best;
        }
    }

    // Survivors sit at exactly {0,1}; settle the biases under the
    // constraint penalty at the final sharpness.
    out.policy = masked;
    for (int episode = 0; episode < cfg.polish_episodes; ++episode) {
        const double cost = episode_pass(true);
        const double residual = lnn::constraint_residual(out.policy);
        out.log.push_back({cfg.episodes + episode, cost, 0.0, residual,
                           crispness_report(lnn_weight_values(out.policy)).max_dist});
    }

    try {
        out.crisp = lnn::crispen_formula(out.policy, cfg.crisp_tol);
        out.crisp_ok = true;
    } catch (const CrispenError& e) {
        out.crisp_ok = false;
        out.crisp_error = e.what();
    }
    return out;
}

ToyTrajectory rollout_crisp(const lnn::Formula<double>& crisp, const sim::ToyConfig& toy,
                            sim::ToyScenario scenario, const DpcConfig& cfg) {
    check_policy_template(crisp);
    const ToyPredicates preds = make_toy_predicates(cfg);
    const VecD prices = sim::toy_price_path(scenario, toy);

    const lnn::Gate<double>& antecedent = crisp.root.children[0];
    ToyTrajectory out;
    double temp = toy.start_temp;
    for (int t = 0; t < toy.horizon; ++t) {
        std::map<std::string, bool> bindings;
        bindings["Hot"] = temp > preds.hot.threshold;
        bindings["PowerCheap"] = prices(t) < preds.cheap.threshold;
        for (const auto& name : lnn::predicates(crisp))
            if (!bindings.count(name)) bindings[name] = false;
        const double u = lnn::evaluate_classical(antecedent, bindings) ? 1.0 : 0.0;
        const auto step = sim::toy_step(temp, u, prices(t), toy);
        temp = value_of(step.temp);
        out.temp.push_back(temp);
        out.u.push_back(u);
        out.price.push_back(prices(t));
        out.step_cost.push_back(value_of(step.cost));
        out.total_cost += value_of(step.cost);
    }
    return out;
}

std::string toy_trajectory_to_csv(const ToyTrajectory& t) {
    io::Csv csv({"step", "T", "u", "price", "step_cost"});
    for (size_t i = 0; i < t.temp.size(); ++i)
        csv.add_row({io::csv_field(static_cast<int>(i)), io::csv_field(t.temp[i]),
                     io::csv_field(t.u[i]), io::csv_field(t.price[i]),
                     io::csv_field(t.step_cost[i])});
    return csv.text();
}

std::string CostTable::to_csv() const {
    std::vector<std::string> header{"controller"};
    for (int m : months) header.push_back("month_" + std::to_string(m));
    io::Csv csv(header);
    for (size_t i = 0; i < controllers.size(); ++i) {
        std::vector<std::string> row{controllers[i]};
        for (Eigen::Index j = 0; j < cost.cols(); ++j)
            row.push_back(io::csv_field(cost(static_cast<Eigen::Index>(i), j)));
        csv.add_row(row);
    }
    return csv.text();
}

CostTable evaluate_controllers(const sim::EnvConfig& env,
                               const std::vector<sim::Controller>& controllers,
                               const std::vector<int>& months) {
    CostTable table;
    table.months = months;
    table.cost = MatD::Zero(static_cast<Eigen::Index>(controllers.size()),
                            static_cast<Eigen::Index>(months.size()));
    for (size_t i = 0; i < controllers.size(); ++i) {
        table.controllers.push_back(controllers[i].name);
        for (size_t j = 0; j < months.size(); ++j)
            table.cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                sim::run_episode(env, controllers[i], months[j]).total_cost;
    }
    return table;
}

}  // namespace nsrl::training
