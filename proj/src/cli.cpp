#include "nsrl/cli.hpp"

#include <filesystem>
#include <iostream>
#include <json.hpp>

#include "nsrl/building.hpp"
#include "nsrl/ddt.hpp"
#include "nsrl/grounding.hpp"
#include "nsrl/io.hpp"
#include "nsrl/lnn.hpp"
#include "nsrl/planner.hpp"
#include "nsrl/toy_hvac.hpp"
#include "nsrl/training.hpp"
#include "nsrl/types.hpp"
#include "nsrl/worldmodel.hpp"

namespace nsrl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw ConfigError("config: missing or unsupported schema_version (expected 1)");
    return j;
}

std::string resolve_path(const std::string& path, const Overrides& ov) {
    if (path.empty() || fs::path(path).is_absolute() || ov.config_base.empty()) return path;
    const fs::path joined = fs::path(ov.config_base) / path;
    return fs::exists(joined) ? joined.string() : path;
}

sim::EnvConfig env_from_config(const json& j, const Overrides& ov) {
    if (j.contains("env_config"))
        return sim::load_env(resolve_path(j["env_config"].get<std::string>(), ov));
    if (j.contains("env")) return sim::env_from_json_text(j["env"].dump());
    return sim::EnvConfig{};
}

uint64_t seed_of(const json& j, const Overrides& ov) {
    if (ov.seed) return *ov.seed;
    return j.value("seed", uint64_t{1});
}

std::string out_of(const json& j, const Overrides& ov) {
    if (ov.out_dir) return *ov.out_dir;
    return j.value("out", std::string("out"));
}

std::vector<int> months_of(const json& j, const Overrides& ov) {
    std::vector<int> months;
    if (ov.months)
        months = *ov.months;
    else if (j.contains("months"))
        months = j["months"].get<std::vector<int>>();
    else
        for (int m = 1; m <= 12; ++m) months.push_back(m);
    for (int m : months)
        if (m < 1 || m > 12) throw ConfigError("config: month outside 1..12");
    if (months.empty()) throw ConfigError("config: empty month list");
    return months;
}

lnn::FitConfig fit_config_of(const json& j) {
    lnn::FitConfig cfg;
    if (!j.contains("fit")) return cfg;
    const json& f = j["fit"];
    cfg.lr = f.value("lr", cfg.lr);
    cfg.epochs = f.value("epochs", cfg.epochs);
    cfg.penalty0 = f.value("penalty0", cfg.penalty0);
    cfg.penalty_growth = f.value("penalty_growth", cfg.penalty_growth);
    cfg.penalty_max = f.value("penalty_max", cfg.penalty_max);
    cfg.polish_epochs = f.value("polish_epochs", cfg.polish_epochs);
    cfg.residual_target = f.value("residual_target", cfg.residual_target);
    return cfg;
}

}  // namespace

std::string fresh_run_dir(const std::string& out_dir) {
    fs::create_directories(out_dir);
    for (int k = 1; k < 100000; ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "run-%04d", k);
        const fs::path candidate = fs::path(out_dir) / name;
        if (!fs::exists(candidate)) {
            fs::create_directory(candidate);
            return candidate.string();
        }
    }
    throw ConfigError("run directory counter exhausted");
}

std::string default_config_text(const std::string& command) {
    if (command == "mfrl" || command == "eval-rbc") {
        return R"json({
  "schema_version": 1,
  "seed": 1,
  "out": "out",
  "train_month": 6,
  "months": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
  "ddt_depth": 2,
  "warm_sharpness": 50.0,
  "crisp_sharpness": 1000.0,
  "mlp_hidden": 16,
  "reg_p": 8,
  "reg_lambda": 0.01,
  "algorithm": "cem",
  "cem": {"population": 32, "elites": 8, "iterations": 15, "init_std": 0.5, "std_floor": 0.02},
  "env": {}
})json";
    }
    if (command == "ilp") {
        return R"json({
  "schema_version": 1,
  "seed": 1,
  "out": "out",
  "template_sharpness": 4.0,
  "alpha": 0.95,
  "fit": {"lr": 0.05, "epochs": 3000, "penalty0": 1.0, "penalty_growth": 1.002,
          "penalty_max": 200.0, "polish_epochs": 500, "residual_target": 1e-6},
  "init": {"cold": true, "red": true},
  "goal": {"pos": [], "neg": ["cold"]},
  "vocab": {
    "constants": {"mydesiredtemp": 20.0},
    "margin": 2.0,
    "vocab": {
      "cold": ["Temperature - Indoor (C)", "abs", "<", "mydesiredtemp"],
      "red": ["Color", "abs", "==", "red"]
    },
    "actions": {
      "pull_switch": ["Load Fraction", "abs", 1, 5, 0]
    }
  }
})json";
    }
    if (command == "dpc") {
        return R"json({
  "schema_version": 1,
  "seed": 1,
  "out": "out",
  "scenario": "uniform",
  "alpha": 0.95,
  "toy": {"horizon": 10, "start_temp": 5.0, "comfort_limit": 2.0, "discomfort_weight": 5.0,
          "base_price": 1.0, "spike_price": 20.0, "spike_step": 1},
  "dpc": {"episodes": 60, "lr": 0.1, "eta": 1.15, "kappa0": 4.0, "gate_sharpness0": 8.0,
          "penalty": 2.0, "hot_threshold": 1.9, "cheap_threshold": 5.0}
})json";
    }
    throw UsageError("no default config for command '" + command + "'");
}

namespace {

sim::ToyConfig toy_of(const json& j) {
    sim::ToyConfig t;
    if (!j.contains("toy")) return t;
    const json& c = j["toy"];
    t.horizon = c.value("horizon", t.horizon);
    t.start_temp = c.value("start_temp", t.start_temp);
    t.comfort_limit = c.value("comfort_limit", t.comfort_limit);
    t.discomfort_weight = c.value("discomfort_weight", t.discomfort_weight);
    t.base_price = c.value("base_price", t.base_price);
    t.spike_price = c.value("spike_price", t.spike_price);
    t.spike_step = c.value("spike_step", t.spike_step);
    return t;
}

training::DpcConfig dpc_of(const json& j, uint64_t seed) {
    training::DpcConfig d;
    d.seed = seed;
    if (!j.contains("dpc")) return d;
    const json& c = j["dpc"];
    d.episodes = c.value("episodes", d.episodes);
    d.warmup_episodes = c.value("warmup_episodes", d.warmup_episodes);
    d.lr = c.value("lr", d.lr);
    d.max_step = c.value("max_step", d.max_step);
    d.eta = c.value("eta", d.eta);
    d.kappa0 = c.value("kappa0", d.kappa0);
    d.gate_sharpness0 = c.value("gate_sharpness0", d.gate_sharpness0);
    d.sharpness_max = c.value("sharpness_max", d.sharpness_max);
    d.penalty = c.value("penalty", d.penalty);
    d.crisp_tol = c.value("crisp_tol", d.crisp_tol);
    d.polish_episodes = c.value("polish_episodes", d.polish_episodes);
    d.validation_rollouts = c.value("validation_rollouts", d.validation_rollouts);
    d.hot_threshold = c.value("hot_threshold", d.hot_threshold);
    d.cheap_threshold = c.value("cheap_threshold", d.cheap_threshold);
    return d;
}

training::CemConfig cem_of(const json& j, uint64_t seed, int reg_p, double reg_lambda) {
    training::CemConfig c;
    c.seed = seed;
    c.reg_p = reg_p;
    c.reg_lambda = reg_lambda;
    if (!j.contains("cem")) return c;
    const json& k = j["cem"];
    c.population = k.value("population", c.population);
    c.elites = k.value("elites", c.elites);
    c.iterations = k.value("iterations", c.iterations);
    c.init_std = k.value("init_std", c.init_std);
    c.std_floor = k.value("std_floor", c.std_floor);
    return c;
}

}  // namespace

int cmd_mfrl(const std::string& config_text, const Overrides& ov) {
    const json j = parse_config(config_text);
    const sim::EnvConfig env = env_from_config(j, ov);
    const uint64_t seed = seed_of(j, ov);
    const auto months = months_of(j, ov);
    const int train_month = j.value("train_month", 6);
    const int depth = j.value("ddt_depth", 2);
    const double warm_sharpness = j.value("warm_sharpness", 50.0);
    const double crisp_sharpness = j.value("crisp_sharpness", 1000.0);
    const int reg_p = j.value("reg_p", 8);
    const double reg_lambda = j.value("reg_lambda", 0.01);
    const std::string algorithm = j.value("algorithm", std::string("cem"));
    const std::string dir = fresh_run_dir(out_of(j, ov));

    VecD levels(3);
    levels << 15.0, 20.0, 30.0;
    const auto ddt_names = sim::obs_names(sim::ObsProfile::Ddt, env);

    // warm start: compiled RBC, then tuned in place
    const ddt::Ddt<double> warm0 = ddt::warm_start_precool(levels, warm_sharpness);
    std::mt19937 rng(seed);
    const ddt::Ddt<double> cold0 = ddt::random_ddt(depth, 4, levels, rng);

    ddt::Ddt<double> warm_trained, cold_trained;
    if (algorithm == "cem") {
        auto cem = cem_of(j, seed, reg_p, reg_lambda);
        auto warm_cfg = cem;
        warm_cfg.init_std = j.contains("cem") ? j["cem"].value("warm_init_std", 0.05) : 0.05;
        const auto rw = training::train_cem(env, train_month, warm0, warm_cfg);
        io::write_file(dir + "/cem_warm_log.csv", training::train_log_to_csv(rw.log));
        warm_trained = rw.policy;

        const auto rc = training::train_cem(env, train_month, cold0, cem);
        io::write_file(dir + "/cem_cold_log.csv", training::train_log_to_csv(rc.log));
        cold_trained = rc.policy;
    } else if (algorithm == "pg") {
        training::PgConfig pg;
        pg.seed = seed;
        pg.reg_p = reg_p;
        pg.reg_lambda = reg_lambda;
        if (j.contains("pg")) {
            const json& p = j["pg"];
            pg.lr = p.value("lr", pg.lr);
            pg.explore_std = p.value("explore_std", pg.explore_std);
            pg.episodes = p.value("episodes", pg.episodes);
        }
        const auto rw = training::train_pg(env, train_month, warm0, pg);
        io::write_file(dir + "/pg_warm_log.csv", training::train_log_to_csv(rw.log));
        warm_trained = rw.policy;
        const auto rc = training::train_pg(env, train_month, cold0, pg);
        io::write_file(dir + "/pg_cold_log.csv", training::train_log_to_csv(rc.log));
        cold_trained = rc.policy;
    } else {
        throw ConfigError("mfrl: unknown algorithm '" + algorithm + "'");
    }

    // MLP baseline on the FULL profile, trained with the same CEM
    std::mt19937 mlp_rng(seed + 1);
    const int mlp_inputs = static_cast<int>(sim::obs_names(sim::ObsProfile::Full, env).size());
    const training::Mlp mlp0 =
        training::random_mlp(mlp_inputs, j.value("mlp_hidden", 16), mlp_rng);
    auto mlp_cem = cem_of(j, seed + 1, reg_p, 0.0);
    std::vector<training::TrainLogRow> mlp_log;
    const VecD mlp_best = training::cem_optimize(
        training::mlp_flatten(mlp0), mlp_cem,
        [&](const VecD& p) {
            const training::Mlp m = training::mlp_unflatten(mlp0, p);
            return sim::run_episode(env, training::make_mlp_controller(m, "MLP"), train_month)
                .total_cost;
        },
        &mlp_log);
    const training::Mlp mlp = training::mlp_unflatten(mlp0, mlp_best);
    io::write_file(dir + "/cem_mlp_log.csv", training::train_log_to_csv(mlp_log));

    const std::vector<sim::Controller> controllers = {
        training::make_rbc_controller(),
        training::make_ddt_controller(warm_trained, "DDT-warm"),
        training::make_ddt_controller(cold_trained, "DDT-cold"),
        training::make_mlp_controller(mlp, "MLP"),
    };
    const auto table = training::evaluate_controllers(env, controllers, months);
    io::write_file(dir + "/costs.csv", table.to_csv());

    ddt::save(warm_trained, dir + "/ddt_warm.json");
    ddt::save(cold_trained, dir + "/ddt_cold.json");
    ddt::save(ddt::crispen(warm_trained, crisp_sharpness), dir + "/ddt_warm_crisp.json");
    ddt::save(ddt::crispen(cold_trained, crisp_sharpness), dir + "/ddt_cold_crisp.json");
    io::write_file(dir + "/ddt_warm_rules.txt", ddt::render(warm_trained, ddt_names));
    io::write_file(dir + "/ddt_cold_rules.txt", ddt::render(cold_trained, ddt_names));
    io::write_file(dir + "/mlp.json", training::mlp_to_json(mlp));

    std::cout << dir << "\n";
    return kExitOk;
}

int cmd_ilp(const std::string& config_text, const Overrides& ov) {
    const json j = parse_config(config_text);
    const uint64_t seed = seed_of(j, ov);
    (void)seed;  // the pipeline is deterministic; seed kept for config uniformity
    const std::string dir = fresh_run_dir(out_of(j, ov));

    grounding::Vocabulary vocab;
    if (j.contains("vocab_path"))
        vocab = grounding::load_vocabulary(resolve_path(j["vocab_path"].get<std::string>(), ov));
    else if (j.contains("vocab"))
        vocab = grounding::vocabulary_from_json_text(j["vocab"].dump());
    else
        throw ConfigError("ilp: config needs 'vocab' or 'vocab_path'");

    const double desired = vocab.constants.count("mydesiredtemp")
                               ? vocab.constants.at("mydesiredtemp")
                               : 20.0;
    worldmodel::HeatSwitchSim sim(desired);
    const auto probe_result = worldmodel::probe(sim, vocab);
    if (probe_result.skipped > 0)
        std::cerr << "warning: " << probe_result.skipped << " infeasible assignments skipped\n";
    io::write_file(dir + "/probe_records.csv",
                   worldmodel::probe_records_to_csv(vocab, probe_result.records));

    const double alpha = j.value("alpha", 0.95);
    const double sharpness = j.value("template_sharpness", 4.0);
    const lnn::FitConfig fit_cfg = fit_config_of(j);

    planner::PlanningProblem problem;
    for (const auto& e : vocab.entries) problem.atoms.push_back(e.name);
    std::sort(problem.atoms.begin(), problem.atoms.end());

    std::string rules_text;
    for (const auto& action : vocab.actions) {
        const auto tmpl = worldmodel::default_precondition_template(vocab, alpha, sharpness);
        const auto pre = worldmodel::learn_preconditions(probe_result.records, action.name, tmpl,
                                                         fit_cfg);
        if (pre.never_applicable) {
            rules_text += action.name + ": never applicable, omitted from the domain\n";
            continue;
        }
        const auto crisp = lnn::crispen_formula(pre.fitted);
        const auto effects = worldmodel::learn_effects(probe_result.records, action.name);
        problem.actions.push_back(worldmodel::to_strips(action.name, crisp, effects));

        rules_text += action.name + ": precondition " + lnn::template_text(crisp) + "\n";
        rules_text += action.name + ": add {";
        for (const auto& a : effects.add) rules_text += " " + a;
        rules_text += " } delete {";
        for (const auto& d : effects.del) rules_text += " " + d;
        rules_text += " }\n";
    }
    io::write_file(dir + "/rules.txt", rules_text);

    if (!j.contains("init") || !j.contains("goal"))
        throw ConfigError("ilp: config needs 'init' and 'goal'");
    for (const auto& [name, truth] : j["init"].items())
        if (truth.get<bool>()) problem.init.insert(name);
    for (const auto& g : j["goal"].value("pos", std::vector<std::string>{}))
        problem.goal_pos.insert(g);
    for (const auto& g : j["goal"].value("neg", std::vector<std::string>{}))
        problem.goal_neg.insert(g);

    const auto pddl = planner::emit_pddl(problem);
    io::write_file(dir + "/domain.pddl", pddl.domain);
    io::write_file(dir + "/problem.pddl", pddl.problem);

    // round trip through our own parser before solving
    const auto reparsed = planner::parse_pddl(pddl.domain, pddl.problem);
    const auto plan = planner::solve(reparsed);
    std::string plan_text;
    if (plan)
        for (const auto& step : *plan) plan_text += step + "\n";
    else
        plan_text = "NO PLAN\n";
    io::write_file(dir + "/plan.txt", plan_text);

    std::cout << dir << "\n";
    return plan ? kExitOk : kExitNoPlan;
}

int cmd_dpc(const std::string& config_text, const Overrides& ov) {
    const json j = parse_config(config_text);
    const uint64_t seed = seed_of(j, ov);
    const std::string dir = fresh_run_dir(out_of(j, ov));

    const std::string scenario_name =
        ov.scenario ? *ov.scenario : j.value("scenario", std::string("uniform"));
    const sim::ToyScenario scenario = sim::toy_scenario_from_string(scenario_name);
    const sim::ToyConfig toy = toy_of(j);
    const training::DpcConfig dpc = dpc_of(j, seed);
    const double alpha = j.value("alpha", 0.95);

    std::string template_text = j.value(
        "template", scenario == sim::ToyScenario::Uniform
                        ? std::string("Implies(And(Hot(x), Fake(x)),TurnACOn(x))")
                        : std::string("Implies(Or(And(Hot(x), PowerCheap(x)), And(Fake1(x), "
                                      "Fake2(x))),TurnACOn(x))"));
    const auto tmpl = lnn::parse_template(template_text, alpha);

    const auto result = training::train_dpc(toy, scenario, tmpl, dpc);
    io::write_file(dir + "/training_log.csv", training::train_log_to_csv(result.log));
    io::write_file(dir + "/policy_lnn.txt", lnn::serialize(result.policy));

    if (result.crisp_ok) {
        io::write_file(dir + "/rule.txt", lnn::template_text(result.crisp) + "\n");
        const auto traj = training::rollout_crisp(result.crisp, toy, scenario, dpc);
        io::write_file(dir + "/trajectory.csv", training::toy_trajectory_to_csv(traj));
    } else {
        io::write_file(dir + "/rule.txt", "CRISPENING FAILED: " + result.crisp_error + "\n");
        std::cerr << "error: " << result.crisp_error << "\n";
    }

    std::cout << dir << "\n";
    return result.crisp_ok ? kExitOk : kExitTraining;
}

int cmd_plan(const std::string& domain_path, const std::string& problem_path) {
    const auto problem =
        planner::parse_pddl(io::read_file(domain_path), io::read_file(problem_path));
    const auto plan = planner::solve(problem);
    if (!plan) {
        std::cout << "NO PLAN\n";
        return kExitNoPlan;
    }
    for (const auto& step : *plan) std::cout << step << "\n";
    return kExitOk;
}

int cmd_eval_rbc(const std::string& config_text, const Overrides& ov) {
    const json j = parse_config(config_text);
    const sim::EnvConfig env = env_from_config(j, ov);
    const auto months = months_of(j, ov);
    const auto table =
        training::evaluate_controllers(env, {training::make_rbc_controller()}, months);
    std::cout << table.to_csv();
    return kExitOk;
}

}  // namespace nsrl::cli
