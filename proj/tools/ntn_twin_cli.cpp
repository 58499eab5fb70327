// ntn-twin: command-line front end for the slicing simulator.
//
//   ntn-twin run     --scenario s.yaml [--policy P]... [--weights w.bin]
//   ntn-twin train   --scenario s.yaml
//   ntn-twin eval    --scenario s.yaml --weights w.bin
//   ntn-twin compare --scenario s.yaml
//   ntn-twin sweep   --scenario s.yaml [--lambda L]...
//
// Output goes to --out, else $NTN_TWIN_OUT, else ./out.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ntn/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options
{
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> policies;
    std::string weights;
    std::vector<double> lambdas;
    std::optional<std::uint64_t> horizon;
};

std::filesystem::path output_dir(const Options& o)
{
    if (!o.out.empty()) {
        return o.out;
    }
    if (const char* env = std::getenv("NTN_TWIN_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "out";
}

ntn::Scenario scenario_from(const Options& o)
{
    ntn::Scenario s = o.scenario.empty() ? ntn::Scenario{} : ntn::load_scenario(o.scenario);
    if (o.seed) {
        s.seed = *o.seed;
    }
    if (o.horizon) {
        s.horizon = *o.horizon;
    }
    s.validate();
    return s;
}

std::vector<ntn::PolicyKind> policies_from(const Options& o, std::vector<ntn::PolicyKind> fallback)
{
    if (o.policies.empty()) {
        return fallback;
    }
    std::vector<ntn::PolicyKind> out;
    for (const auto& id : o.policies) {
        auto k = ntn::parse_policy(id);
        if (!k) {
            throw ntn::ConfigError(fmt::format("unknown policy '{}'", id));
        }
        out.push_back(*k);
    }
    return out;
}

void print_runs(const ntn::ExperimentResult& r)
{
    fmt::print("{:<12} {:>8} {:>10} {:>10} {:>10}\n", "policy", "lambda", "mean_se", "outage", "exceed");
    for (const auto& s : r.runs) {
        fmt::print("{:<12} {:>8.1f} {:>10.4f} {:>10.4f} {:>10.4f}\n", s.policy_id, s.lambda,
                   s.mean_spectral_efficiency, s.outage_probability, s.cdf.exceedance);
    }
    fmt::print("comparison: {}\n", r.comparison.string());
}

int run_verb(const std::string& verb, const Options& o)
{
    const ntn::Scenario sc = scenario_from(o);
    const auto out = output_dir(o);

    if (verb == "train") {
        const auto t = ntn::train_command(sc, out);
        const auto& curve = t.result.loss_curve;
        fmt::print("loss {:.6f} -> {:.6f} over {} epochs\n", curve.front().loss, curve.back().loss,
                   curve.size() - 1);
        fmt::print("weights: {}\nloss curve: {}\n", t.weights.string(), t.loss_curve.string());
        return 0;
    }

    ntn::ExperimentSpec spec;
    spec.scenario = sc;
    spec.out_dir = out;
    if (!o.weights.empty()) {
        spec.weights = o.weights;
    }

    if (verb == "run") {
        spec.policies = policies_from(o, {ntn::PolicyKind::DNN_REPAIR});
    } else if (verb == "eval") {
        spec.policies = policies_from(o, {ntn::PolicyKind::DNN_REPAIR});
        spec.train_if_missing = false;
    } else if (verb == "compare") {
        spec.policies = policies_from(o, sc.policies);
    } else { // sweep
        spec.policies = policies_from(o, sc.policies);
        spec.lambda_sweep = o.lambdas.empty() ? sc.lambda_sweep : o.lambdas;
    }
    print_runs(ntn::run_experiment(spec));
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"LEO NTN slicing simulator with a digital twin"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the verb

    Options o;
    app.add_option("--scenario", o.scenario, "scenario YAML file (defaults when omitted)")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "override the scenario seed");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--policy", o.policies, "orthogonal | oracle | dnn | dnn+repair (repeatable)");
    app.add_option("--weights", o.weights, "trained weights file")->check(CLI::ExistingFile);
    app.add_option("--horizon", o.horizon, "override the number of slots per run");

    app.add_subcommand("run", "simulate each policy on the scenario's traffic");
    app.add_subcommand("train", "label twin snapshots with the oracle and train the allocator");
    app.add_subcommand("eval", "simulate with existing weights (no training)");
    app.add_subcommand("compare", "run every scenario policy and write a comparison table");
    auto* sweep = app.add_subcommand("sweep", "policies x constant lambda values");
    sweep->add_option("--lambda", o.lambdas, "lambda values (default: scenario sweep)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    const std::string verb = app.get_subcommands().front()->get_name();
    try {
        return run_verb(verb, o);
    } catch (const ntn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
