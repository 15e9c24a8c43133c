#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "nsrl/cli.hpp"
#include "nsrl/io.hpp"
#include "nsrl/types.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::vector<int> months;
    std::string scenario;
    uint64_t seed = 0;
    bool seed_set = false, out_set = false, months_set = false, scenario_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "config file (JSON)");
    cmd->add_option("--seed", f.seed, "random seed")->each([&](const std::string&) {
        f.seed_set = true;
    });
    cmd->add_option("--out", f.out_dir, "output directory")->each([&](const std::string&) {
        f.out_set = true;
    });
    cmd->add_option("--months", f.months, "months to evaluate (1..12)")
        ->delimiter(',')
        ->each([&](const std::string&) { f.months_set = true; });
    cmd->add_option("--scenario", f.scenario, "toy scenario (uniform|spike)")
        ->each([&](const std::string&) { f.scenario_set = true; });
}

nsrl::cli::Overrides overrides_of(const CommonFlags& f) {
    nsrl::cli::Overrides ov;
    if (f.seed_set) ov.seed = f.seed;
    if (f.out_set) ov.out_dir = f.out_dir;
    if (f.months_set) ov.months = f.months;
    if (f.scenario_set) ov.scenario = f.scenario;
    if (!f.config_path.empty())
        ov.config_base = std::filesystem::path(f.config_path).parent_path().string();
    return ov;
}

std::string config_text_for(const CommonFlags& f, const std::string& command) {
    if (!f.config_path.empty()) return nsrl::io::read_file(f.config_path);
    return nsrl::cli::default_config_text(command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interpretable neurosymbolic control experiments"};
    app.require_subcommand(1);

    CommonFlags mfrl_flags, ilp_flags, dpc_flags, rbc_flags;
    auto* mfrl = app.add_subcommand("mfrl", "model-free RL: DDT/RBC/MLP cost table");
    add_common(mfrl, mfrl_flags);
    auto* ilp = app.add_subcommand("ilp", "probe, learn a world model, emit PDDL, plan");
    add_common(ilp, ilp_flags);
    auto* dpc = app.add_subcommand("dpc", "differentiable predictive control with an LNN policy");
    add_common(dpc, dpc_flags);
    auto* evalrbc = app.add_subcommand("eval-rbc", "evaluate the rule-based controller");
    add_common(evalrbc, rbc_flags);

    std::string domain_path, problem_path;
    auto* plan = app.add_subcommand("plan", "solve a STRIPS PDDL problem");
    plan->add_option("domain", domain_path, "domain file")->required();
    plan->add_option("problem", problem_path, "problem file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : nsrl::cli::kExitUsage;
    }

    try {
        if (mfrl->parsed())
            return nsrl::cli::cmd_mfrl(config_text_for(mfrl_flags, "mfrl"),
                                       overrides_of(mfrl_flags));
        if (ilp->parsed())
            return nsrl::cli::cmd_ilp(config_text_for(ilp_flags, "ilp"), overrides_of(ilp_flags));
        if (dpc->parsed())
            return nsrl::cli::cmd_dpc(config_text_for(dpc_flags, "dpc"), overrides_of(dpc_flags));
        if (evalrbc->parsed())
            return nsrl::cli::cmd_eval_rbc(config_text_for(rbc_flags, "eval-rbc"),
                                           overrides_of(rbc_flags));
        if (plan->parsed()) return nsrl::cli::cmd_plan(domain_path, problem_path);
    } catch (const nsrl::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return nsrl::cli::kExitParse;
    } catch (const nsrl::FitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return nsrl::cli::kExitTraining;
    } catch (const nsrl::TrainingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return nsrl::cli::kExitTraining;
    } catch (const nsrl::CrispenError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return nsrl::cli::kExitTraining;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return nsrl::cli::kExitUsage;
    }
    return nsrl::cli::kExitUsage;
}
