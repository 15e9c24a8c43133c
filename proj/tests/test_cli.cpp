#include <cstdlib>
#include <random>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nsrl/cli.hpp"
#include "nsrl/io.hpp"

namespace fs = std::filesystem;
using namespace nsrl;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("nsrl_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(NSRL_CLI_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

int run_cli_capture(const std::string& args, std::string& out) {
    TempDir tmp;
    const fs::path file = tmp.path / "stdout.txt";
    const std::string cmd =
        std::string(NSRL_CLI_BIN) + " " + args + " > " + file.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    out = io::read_file(file.string());
    return WEXITSTATUS(status);
}

std::string config_dir() { return NSRL_CONFIG_DIR; }

}  // namespace

TEST_CASE("plan subcommand exit codes") {
    TempDir tmp;
    const std::string domain = (tmp.path / "d.pddl").string();
    const std::string problem = (tmp.path / "p.pddl").string();

    io::write_file(domain, R"((define (domain d)
      (:requirements :strips :negative-preconditions)
      (:predicates (cold ?x))
      (:action pull_switch
        :parameters (?x)
        :precondition (and (cold ?x))
        :effect (and (not (cold ?x))))))");
    io::write_file(problem, R"((define (problem p)
      (:domain d)
      (:objects x)
      (:init (cold x))
      (:goal (and (not (cold x))))))");

    SUBCASE("a solvable problem prints the plan and exits zero") {
        std::string out;
        CHECK(run_cli_capture("plan " + domain + " " + problem, out) == cli::kExitOk);
        CHECK(out == "pull_switch\n");
    }
    SUBCASE("an unreachable goal exits with the no-plan code") {
        io::write_file(problem, R"((define (problem p)
          (:domain d)
          (:objects x)
          (:init)
          (:goal (and (cold x)))))");
        std::string out;
        CHECK(run_cli_capture("plan " + domain + " " + problem, out) == cli::kExitNoPlan);
        CHECK(out == "NO PLAN\n");
    }
    SUBCASE("malformed files exit with the parse code") {
        io::write_file(domain, "(define (domain");
        CHECK(run_cli("plan " + domain + " " + problem) == cli::kExitParse);
    }
    SUBCASE("usage errors exit with one") {
        CHECK(run_cli("plan") == cli::kExitUsage);
        CHECK(run_cli("frobnicate") == cli::kExitUsage);
    }
}

TEST_CASE("ilp command produces the expected artifacts") {
    TempDir tmp;
    const int rc = run_cli("ilp --config " + config_dir() + "/ilp_heatswitch.json --out " +
                           (tmp.path / "out").string());
    CHECK(rc == cli::kExitOk);

    const fs::path run = tmp.path / "out" / "run-0001";
    REQUIRE(fs::exists(run));
    CHECK(io::read_file((run / "plan.txt").string()) == "pull_switch\n");
    const std::string domain = io::read_file((run / "domain.pddl").string());
    CHECK(domain.find("(:action pull_switch") != std::string::npos);
    CHECK(domain.find("(cold ?x)") != std::string::npos);
    CHECK(fs::exists(run / "probe_records.csv"));
    CHECK(fs::exists(run / "problem.pddl"));
    CHECK(fs::exists(run / "rules.txt"));
}

TEST_CASE("dpc command writes rule and trajectory artifacts") {
    TempDir tmp;
    const int rc = run_cli("dpc --config " + config_dir() + "/dpc_uniform.json --out " +
                           (tmp.path / "out").string());
    CHECK(rc == cli::kExitOk);
    const fs::path run = tmp.path / "out" / "run-0001";
    CHECK(io::read_file((run / "rule.txt").string()) == "Implies(Hot(x),TurnACOn(x))\n");
    const std::string traj = io::read_file((run / "trajectory.csv").string());
    CHECK(traj.rfind("step,T,u,price,step_cost\n", 0) == 0);
    CHECK(fs::exists(run / "training_log.csv"));
    CHECK(fs::exists(run / "policy_lnn.txt"));
}

TEST_CASE("dpc scenario flag overrides the config") {
    TempDir tmp;
    const int rc = run_cli("dpc --config " + config_dir() +
                           "/dpc_spike.json --scenario spike --out " +
                           (tmp.path / "out").string());
    CHECK(rc == cli::kExitOk);
    const fs::path run = tmp.path / "out" / "run-0001";
    CHECK(io::read_file((run / "rule.txt").string()) ==
          "Implies(And(Hot(x),PowerCheap(x)),TurnACOn(x))\n");
}

TEST_CASE("runs never overwrite each other") {
    TempDir tmp;
    const std::string args = "dpc --config " + config_dir() + "/dpc_uniform.json --out " +
                             (tmp.path / "out").string();
    CHECK(run_cli(args) == cli::kExitOk);
    CHECK(run_cli(args) == cli::kExitOk);
    CHECK(fs::exists(tmp.path / "out" / "run-0001"));
    CHECK(fs::exists(tmp.path / "out" / "run-0002"));

    SUBCASE("and identical seeds give byte-identical artifacts") {
        for (const char* name : {"rule.txt", "trajectory.csv", "training_log.csv"}) {
            CHECK(io::read_file((tmp.path / "out" / "run-0001" / name).string()) ==
                  io::read_file((tmp.path / "out" / "run-0002" / name).string()));
        }
    }
}

TEST_CASE("invalid configs exit with the usage code") {
    TempDir tmp;
    const std::string bad = (tmp.path / "bad.json").string();
    io::write_file(bad, "{\"schema_version\": 2}");
    CHECK(run_cli("dpc --config " + bad) == cli::kExitUsage);
    io::write_file(bad, "not json");
    CHECK(run_cli("ilp --config " + bad) == cli::kExitUsage);
}

TEST_CASE("eval-rbc prints a cost table") {
    std::string out;
    const int rc = run_cli_capture("eval-rbc --months 6,7", out);
    CHECK(rc == cli::kExitOk);
    CHECK(out.rfind("controller,month_6,month_7\n", 0) == 0);
    CHECK(out.find("RBC,") != std::string::npos);
}
