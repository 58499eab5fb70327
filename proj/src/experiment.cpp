#include "ntn/experiment.hpp"

#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ntn/envsim.hpp"
#include "ntn/twin.hpp"

namespace ntn {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index)
{
    return splitmix64(base ^ splitmix64(index + 0x51ed));
}

namespace {

bool needs_net(PolicyKind k)
{
    return k == PolicyKind::DNN || k == PolicyKind::DNN_REPAIR;
}

struct Decider
{
    const Scenario& scenario;
    const NetworkLayout& layout;
    const Mlp* net;
    FeatureEncoder encoder;

    PolicyDecision operator()(PolicyKind kind, const TwinSnapshot& snap, std::size_t& exhausted) const
    {
        switch (kind) {
        case PolicyKind::ORTHOGONAL:
            return orthogonal_allocate(snap, scenario.orthogonal, layout);
        case PolicyKind::ORACLE:
            return oracle_allocate(snap, layout, snap.qos(), scenario.oracle);
        case PolicyKind::DNN:
            return dynamic_allocate(snap, *net, layout, snap.qos(), encoder);
        case PolicyKind::DNN_REPAIR: {
            auto r = priority_repair(dynamic_allocate(snap, *net, layout, snap.qos(), encoder), snap,
                                     snap.qos(), layout);
            exhausted += r.exhausted ? 1 : 0;
            return std::move(r.decision);
        }
        }
        throw std::logic_error("unknown policy");
    }
};

/// Twin side of the loop: history, delay, cadence and summary window.
class TwinFeed
{
public:
    explicit TwinFeed(const Scenario& s)
        : twin_(s.history_depth()), delay_(s.delay()), cadence_(s.twin.cadence), window_(s.twin.summary_window)
    {
    }

    const TwinSnapshot& update(const PhysicalState& phys)
    {
        const Slot now = phys.clock.t;
        if (current_ && now % cadence_ != 0) {
            twin_.observe(phys);
            return *current_;
        }
        auto snap = twin_.sync(phys, delay_, now);
        if (window_ > 1) {
            recent_.push_back(std::move(snap));
            if (recent_.size() > window_) {
                recent_.erase(recent_.begin());
            }
            current_.emplace(summarize(recent_, window_));
        } else {
            current_.emplace(std::move(snap));
        }
        return *current_;
    }

private:
    DigitalTwin twin_;
    DelayClass delay_;
    Slot cadence_;
    Slot window_;
    std::vector<TwinSnapshot> recent_;
    std::optional<TwinSnapshot> current_;
};

} // namespace

RunResult simulate(const Scenario& scenario, PolicyKind policy, const Mlp* net,
                   const LambdaSchedule& lambda, std::uint64_t seed)
{
    if (needs_net(policy) && net == nullptr) {
        throw MissingWeights(fmt::format("policy '{}' needs trained weights", policy_id(policy)));
    }
    const EnvConfig env = scenario.env(lambda);
    const Decider decide{scenario, env.layout, net, scenario.encoder()};

    RunResult result;
    result.slots.reserve(scenario.horizon);
    result.twin_log.reserve(scenario.horizon);

    Rng rng(seed);
    PhysicalState phys = initial_state(env, rng);
    TwinFeed feed(scenario);
    for (Slot t = 0; t < scenario.horizon; ++t) {
        const TwinSnapshot& snap = feed.update(phys);
        const PolicyDecision decision = decide(policy, snap, result.repair_exhausted);

        const auto cal = calibrate(snap, phys);
        result.twin_log.push_back({t, snap.captured_at(), snap.delivered_at(), staleness(snap, t),
                                   snap.staleness_underflow(), cal.mean_abs_snr_error,
                                   cal.mean_abs_queue_error});

        StepResult step = advance(phys, decision.allocation, env, rng);
        result.slots.push_back(slot_metrics(step.outcome, env.layout, env.qos));
        phys = std::move(step.next);
    }

    result.summary = summarize_run(result.slots, std::string(policy_id(policy)), seed, scenario.hash(),
                                   scenario.outage_window, scenario.qos.urllc_outage_threshold);
    return result;
}

std::vector<Sample> generate_dataset(const Scenario& scenario, const LambdaSchedule& lambda,
                                     std::size_t samples, std::uint64_t seed)
{
    const EnvConfig env = scenario.env(lambda);
    const FeatureEncoder encoder = scenario.encoder();
    std::vector<Sample> data;
    data.reserve(samples);

    Rng rng(seed);
    PhysicalState phys = initial_state(env, rng);
    TwinFeed feed(scenario);
    for (std::size_t i = 0; i < samples; ++i) {
        const TwinSnapshot& snap = feed.update(phys);
        auto label = oracle_allocate(snap, env.layout, snap.qos(), scenario.oracle);
        data.push_back({encoder.encode(snap, env.layout, snap.qos()), label.allocation});
        phys = advance(phys, label.allocation, env, rng).next;
    }
    return data;
}

TrainOutput train_command(const Scenario& scenario, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    const auto& tc = scenario.training;
    const auto data = generate_dataset(scenario, scenario.training_schedule(), tc.samples,
                                       derive_seed(tc.train.seed, 0xda7a));
    const auto layout = scenario.layout();
    Mlp net = Mlp::glorot(scenario.mlp_sizes(), layout.num_users(), tc.train.seed);

    TrainOutput out{train(std::move(net), data, tc.train), out_dir / "weights.bin", out_dir / "loss.csv"};
    save_weights(out.result.net, out.weights);

    std::ofstream os(out.loss_curve, std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write " + out.loss_curve.string());
    }
    fmt::print(os, "step,loss\n");
    for (const auto& p : out.result.loss_curve) {
        fmt::print(os, "{},{:.9f}\n", p.step, p.loss);
    }
    return out;
}

void ExperimentSpec::validate() const
{
    scenario.validate();
    if (policies.empty()) {
        throw ConfigError("experiment needs at least one policy");
    }
    for (const double l : lambda_sweep) {
        if (!(l >= 0.0)) {
            throw ConfigError("lambda sweep values must be >= 0");
        }
    }
}

std::string run_file_stem(PolicyKind policy, std::optional<double> lambda)
{
    std::string id(policy_id(policy));
    for (char& c : id) {
        if (c == '+') {
            c = '-';
        }
    }
    if (!lambda) {
        return "run_" + id;
    }
    return fmt::format("run_{}_lambda{:g}", id, *lambda);
}

void write_twin_log(std::span<const TwinLogRow> rows, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
    fmt::print(os, "t,captured_at,delivered_at,staleness,underflow,mean_abs_snr_error,mean_abs_queue_error\n");
    for (const auto& r : rows) {
        fmt::print(os, "{},{},{},{},{},{:.9f},{:.3f}\n", r.t, r.captured_at, r.delivered_at, r.staleness,
                   r.underflow ? 1 : 0, r.mean_abs_snr_error, r.mean_abs_queue_error);
    }
}

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);
    const Scenario& sc = spec.scenario;

    std::optional<Mlp> net;
    bool want_net = false;
    for (const auto p : spec.policies) {
        want_net = want_net || needs_net(p);
    }
    if (want_net) {
        if (spec.weights) {
            net = load_weights(*spec.weights);
        } else if (spec.train_if_missing) {
            net = train_command(sc, spec.out_dir).result.net;
        } else {
            throw MissingWeights("a dnn policy was requested without weights or a train stage");
        }
        const auto layout = sc.layout();
        if (net->input_dim() != FeatureEncoder::input_dim(layout) || net->num_users() != layout.num_users() ||
            net->num_rbs() != layout.num_rbs()) {
            throw ConfigError("weights do not match the scenario's users and resource blocks");
        }
    }

    struct Job
    {
        std::optional<double> lambda;
        LambdaSchedule schedule;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    if (spec.lambda_sweep.empty()) {
        jobs.push_back({std::nullopt, sc.lambda_schedule(), derive_seed(sc.seed, 0)});
    } else {
        // Seed per lambda index: every policy at a given lambda sees the same
        // channel and arrival draws.
        for (std::size_t i = 0; i < spec.lambda_sweep.size(); ++i) {
            jobs.push_back({spec.lambda_sweep[i], LambdaSchedule::constant(spec.lambda_sweep[i]),
                            derive_seed(sc.seed, i)});
        }
    }

    ExperimentResult result;
    for (const auto& job : jobs) {
        for (const auto policy : spec.policies) {
            RunResult run = simulate(sc, policy, net ? &*net : nullptr, job.schedule, job.seed);
            const auto stem = run_file_stem(policy, job.lambda);
            export_csv(run.slots, run.summary, spec.out_dir / (stem + ".csv"));
            write_twin_log(run.twin_log, spec.out_dir / (stem + "_twin.csv"));
            result.runs.push_back(std::move(run.summary));
        }
    }

    result.comparison = spec.out_dir / "comparison.csv";
    std::ofstream os(result.comparison, std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write " + result.comparison.string());
    }
    fmt::print(os, "policy_id,lambda,mean_spectral_efficiency,outage_probability,exceedance_mass\n");
    for (const auto& r : result.runs) {
        fmt::print(os, "{},{:.3f},{:.6f},{:.6f},{:.6f}\n", r.policy_id, r.lambda, r.mean_spectral_efficiency,
                   r.outage_probability, r.cdf.exceedance);
    }
    return result;
}

} // namespace ntn
