#include "ntn/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <yaml-cpp/yaml.h>

namespace ntn {

ConfigError::ConfigError(const std::string& what, int line, int column)
    : std::runtime_error(line > 0 ? fmt::format("line {}, column {}: {}", line, column, what) : what),
      line_(line), column_(column)
{
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

[[noreturn]] void fail_at(const YAML::Mark& mark, const std::string& what)
{
    if (mark.is_null()) {
        throw ConfigError(what);
    }
    throw ConfigError(what, mark.line + 1, mark.column + 1);
}

/// Verifies `node` is a mapping of unique, known scalar keys.
void check_keys(const YAML::Node& node, const std::string& section, std::initializer_list<const char*> allowed)
{
    if (!node.IsMap()) {
        fail_at(node.Mark(), fmt::format("section '{}' must be a mapping", section));
    }
    const std::set<std::string> known(allowed.begin(), allowed.end());
    std::set<std::string> seen;
    for (const auto& kv : node) {
        if (!kv.first.IsScalar()) {
            fail_at(kv.first.Mark(), fmt::format("non-scalar key in '{}'", section));
        }
        const auto key = kv.first.Scalar();
        if (!seen.insert(key).second) {
            fail_at(kv.first.Mark(), fmt::format("duplicate key '{}' in '{}'", key, section));
        }
        if (!known.contains(key)) {
            fail_at(kv.first.Mark(), fmt::format("unknown key '{}' in '{}'", key, section));
        }
    }
}

YAML::Node child(const YAML::Node& node, const char* key)
{
    for (const auto& kv : node) {
        if (kv.first.Scalar() == key) {
            return kv.second;
        }
    }
    return YAML::Node(YAML::NodeType::Undefined);
}

template <typename T>
T scalar_as(const YAML::Node& v, const std::string& what)
{
    if (!v.IsScalar()) {
        fail_at(v.Mark(), fmt::format("'{}' must be a scalar", what));
    }
    try {
        return v.as<T>();
    } catch (const YAML::BadConversion&) {
        fail_at(v.Mark(), fmt::format("'{}' has invalid value '{}'", what, v.Scalar()));
    }
}

void read_double(const YAML::Node& sec, const char* key, double& out)
{
    if (auto v = child(sec, key); v.IsDefined()) {
        out = scalar_as<double>(v, key);
        if (std::isnan(out)) {
            fail_at(v.Mark(), fmt::format("'{}' must be a number", key));
        }
    }
}

template <typename U>
void read_count(const YAML::Node& sec, const char* key, U& out)
{
    if (auto v = child(sec, key); v.IsDefined()) {
        const auto raw = scalar_as<long long>(v, key);
        if (raw < 0) {
            fail_at(v.Mark(), fmt::format("'{}' must be >= 0", key));
        }
        out = static_cast<U>(raw);
    }
}

std::string read_word(const YAML::Node& sec, const char* key)
{
    if (auto v = child(sec, key); v.IsDefined()) {
        return scalar_as<std::string>(v, key);
    }
    return {};
}

std::vector<double> read_doubles(const YAML::Node& v, const char* key)
{
    if (!v.IsSequence()) {
        fail_at(v.Mark(), fmt::format("'{}' must be a list", key));
    }
    std::vector<double> out;
    for (const auto& item : v) {
        out.push_back(scalar_as<double>(item, key));
    }
    return out;
}

void rethrow_semantic(const auto& fn)
{
    try {
        fn();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

std::vector<double> class_snrs(std::size_t n, double mean, double spread)
{
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        out.push_back(mean + spread * pos);
    }
    return out;
}

const char* mode_name(LambdaSchedule::Mode m)
{
    switch (m) {
    case LambdaSchedule::Mode::CONSTANT:
        return "constant";
    case LambdaSchedule::Mode::UNIFORM:
        return "uniform";
    case LambdaSchedule::Mode::CYCLE:
        return "cycle";
    }
    return "?";
}

} // namespace

void Scenario::validate() const
{
    rethrow_semantic([&] {
        if (horizon == 0) {
            throw std::invalid_argument("horizon_slots must be >= 1");
        }
        if (embb_users + urllc_users == 0) {
            throw std::invalid_argument("scenario needs at least one user");
        }
        qos.validate();
        orthogonal.validate();
        twin.profile.validate();
        if (twin.cadence == 0) {
            throw std::invalid_argument("twin cadence_slots must be >= 1");
        }
        if (twin.summary_window == 0) {
            throw std::invalid_argument("twin summary_window must be >= 1");
        }
        if (outage_window == 0) {
            throw std::invalid_argument("outage_window must be >= 1");
        }
        if (!(link.fading.k_factor >= 0.0)) {
            throw std::invalid_argument("k_factor must be >= 0");
        }
        if (!(nn.reference_lambda > 0.0) || !std::isfinite(nn.reference_snr_db)) {
            throw std::invalid_argument("nn reference_lambda must be > 0");
        }
        if (policies.empty()) {
            throw std::invalid_argument("experiment needs at least one policy");
        }
        for (const double l : lambda_sweep) {
            if (!(l >= 0.0)) {
                throw std::invalid_argument("lambda_sweep values must be >= 0");
            }
        }
        training.train.validate();
        if (training.samples == 0) {
            throw std::invalid_argument("train samples must be >= 1");
        }
        layout().validate();
        lambda_schedule();
        training_schedule();
        for (const auto h : nn.hidden) {
            if (h == 0) {
                throw std::invalid_argument("hidden layer widths must be >= 1");
            }
        }
    });
}

NetworkLayout Scenario::layout() const
{
    NetworkLayout l{ResourceGrid(num_rbs, rb_bandwidth), {}, slot_duration};
    UserId id = 0;
    for (const double snr : class_snrs(embb_users, link.embb_mean_snr_db, link.embb_snr_spread_db)) {
        l.users.push_back({id++, ServiceClass::EMBB, {snr, link.fading}});
    }
    for (const double snr : class_snrs(urllc_users, link.urllc_mean_snr_db, link.urllc_snr_spread_db)) {
        l.users.push_back({id++, ServiceClass::URLLC, {snr, link.fading}});
    }
    return l;
}

LambdaSchedule Scenario::lambda_schedule() const
{
    switch (traffic.mode) {
    case LambdaSchedule::Mode::CONSTANT:
        return LambdaSchedule::constant(traffic.lambda);
    case LambdaSchedule::Mode::UNIFORM:
        return LambdaSchedule::uniform(traffic.lambda_min, traffic.lambda_max, seed ^ 0x5eed1a3bdaull);
    case LambdaSchedule::Mode::CYCLE:
        return LambdaSchedule::cycle(traffic.lambda_values, traffic.lambda_hold);
    }
    return LambdaSchedule::constant(0.0);
}

LambdaSchedule Scenario::training_schedule() const
{
    return LambdaSchedule::uniform(training.lambda_min, training.lambda_max,
                                   training.train.seed ^ 0x7a1e5eedull);
}

EnvConfig Scenario::env(const LambdaSchedule& lambda) const
{
    return EnvConfig{layout(), qos, lambda};
}

FeatureEncoder Scenario::encoder() const
{
    return FeatureEncoder{db_to_linear(nn.reference_snr_db), nn.reference_lambda};
}

DelayClass Scenario::delay() const
{
    return DelayClass::from(twin.delay, twin.profile);
}

std::size_t Scenario::history_depth() const
{
    return static_cast<std::size_t>(delay().slots + twin.cadence + 1);
}

std::vector<std::size_t> Scenario::mlp_sizes() const
{
    const auto l = layout();
    return mlp_layout(FeatureEncoder::input_dim(l), nn.hidden, l.num_rbs() * l.num_users());
}

std::string Scenario::canonical() const
{
    std::vector<std::string> pols;
    for (const auto p : policies) {
        pols.emplace_back(policy_id(p));
    }
    std::string s;
    auto put = [&s](std::string_view k, const auto& v) { s += fmt::format("{}={}\n", k, v); };
    auto putd = [&s](std::string_view k, double v) { s += fmt::format("{}={:.17g}\n", k, v); };
    put("seed", seed);
    put("horizon_slots", horizon);
    putd("slot_duration_s", slot_duration);
    put("users.embb", embb_users);
    put("users.urllc", urllc_users);
    put("grid.num_rbs", num_rbs);
    putd("grid.rb_bandwidth_hz", rb_bandwidth);
    putd("link.embb_mean_snr_db", link.embb_mean_snr_db);
    putd("link.embb_snr_spread_db", link.embb_snr_spread_db);
    putd("link.urllc_mean_snr_db", link.urllc_mean_snr_db);
    putd("link.urllc_snr_spread_db", link.urllc_snr_spread_db);
    put("link.fading", link.fading.model == FadingModel::RAYLEIGH ? "rayleigh" : "rician");
    putd("link.k_factor", link.fading.k_factor);
    put("traffic.lambda_mode", mode_name(traffic.mode));
    putd("traffic.lambda", traffic.lambda);
    putd("traffic.lambda_min", traffic.lambda_min);
    putd("traffic.lambda_max", traffic.lambda_max);
    put("traffic.lambda_values", fmt::format("{}", traffic.lambda_values));
    put("traffic.lambda_hold_slots", traffic.lambda_hold);
    putd("qos.embb_min_rate_bps", qos.embb_min_rate);
    putd("qos.urllc_packet_size_bits", qos.urllc_packet_size);
    putd("qos.urllc_outage_threshold", qos.urllc_outage_threshold);
    put("twin.delay", to_string(twin.delay));
    put("twin.moderate_delay_slots", twin.profile.moderate);
    put("twin.significant_delay_slots", twin.profile.significant);
    put("twin.cadence_slots", twin.cadence);
    put("twin.summary_window", twin.summary_window);
    putd("policy.urllc_fraction", orthogonal.urllc_fraction);
    put("policy.exhaustive_cap", oracle.exhaustive_cap);
    putd("policy.penalty_scale", oracle.penalty_scale);
    put("metrics.outage_window", outage_window);
    put("nn.hidden", fmt::format("{}", nn.hidden));
    putd("nn.reference_snr_db", nn.reference_snr_db);
    putd("nn.reference_lambda", nn.reference_lambda);
    putd("train.learning_rate", training.train.learning_rate);
    put("train.epochs", training.train.epochs);
    put("train.batch_size", training.train.batch_size);
    put("train.seed", training.train.seed);
    put("train.standardize_inputs", training.train.standardize_inputs);
    put("train.samples", training.samples);
    putd("train.lambda_min", training.lambda_min);
    putd("train.lambda_max", training.lambda_max);
    put("experiment.policies", fmt::format("{}", pols));
    put("experiment.lambda_sweep", fmt::format("{}", lambda_sweep));
    return s;
}

std::uint64_t Scenario::hash() const
{
    return fnv1a64(canonical());
}

Scenario parse_scenario(const std::string& text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        fail_at(e.mark, e.msg);
    }

    Scenario s;
    if (root.IsNull()) {
        s.validate();
        return s;
    }
    check_keys(root, "<top>",
               {"seed", "horizon_slots", "slot_duration_s", "users", "grid", "link", "traffic", "qos",
                "twin", "policy", "metrics", "nn", "train", "experiment"});

    read_count(root, "seed", s.seed);
    read_count(root, "horizon_slots", s.horizon);
    read_double(root, "slot_duration_s", s.slot_duration);

    if (auto sec = child(root, "users"); sec.IsDefined()) {
        check_keys(sec, "users", {"embb", "urllc"});
        read_count(sec, "embb", s.embb_users);
        read_count(sec, "urllc", s.urllc_users);
    }
    if (auto sec = child(root, "grid"); sec.IsDefined()) {
        check_keys(sec, "grid", {"num_rbs", "rb_bandwidth_hz"});
        read_count(sec, "num_rbs", s.num_rbs);
        read_double(sec, "rb_bandwidth_hz", s.rb_bandwidth);
    }
    if (auto sec = child(root, "link"); sec.IsDefined()) {
        check_keys(sec, "link",
                   {"embb_mean_snr_db", "embb_snr_spread_db", "urllc_mean_snr_db", "urllc_snr_spread_db",
                    "fading", "k_factor"});
        read_double(sec, "embb_mean_snr_db", s.link.embb_mean_snr_db);
        read_double(sec, "embb_snr_spread_db", s.link.embb_snr_spread_db);
        read_double(sec, "urllc_mean_snr_db", s.link.urllc_mean_snr_db);
        read_double(sec, "urllc_snr_spread_db", s.link.urllc_snr_spread_db);
        if (const auto f = read_word(sec, "fading"); !f.empty()) {
            if (f == "rayleigh") {
                s.link.fading.model = FadingModel::RAYLEIGH;
            } else if (f == "rician") {
                s.link.fading.model = FadingModel::RICIAN;
            } else {
                fail_at(child(sec, "fading").Mark(), "fading must be 'rayleigh' or 'rician'");
            }
        }
        read_double(sec, "k_factor", s.link.fading.k_factor);
    }
    if (auto sec = child(root, "traffic"); sec.IsDefined()) {
        check_keys(sec, "traffic",
                   {"lambda_mode", "lambda", "lambda_min", "lambda_max", "lambda_values", "lambda_hold_slots"});
        if (const auto m = read_word(sec, "lambda_mode"); !m.empty()) {
            if (m == "constant") {
                s.traffic.mode = LambdaSchedule::Mode::CONSTANT;
            } else if (m == "uniform") {
                s.traffic.mode = LambdaSchedule::Mode::UNIFORM;
            } else if (m == "cycle") {
                s.traffic.mode = LambdaSchedule::Mode::CYCLE;
            } else {
                fail_at(child(sec, "lambda_mode").Mark(), "lambda_mode must be constant, uniform or cycle");
            }
        }
        read_double(sec, "lambda", s.traffic.lambda);
        read_double(sec, "lambda_min", s.traffic.lambda_min);
        read_double(sec, "lambda_max", s.traffic.lambda_max);
        if (auto v = child(sec, "lambda_values"); v.IsDefined()) {
            s.traffic.lambda_values = read_doubles(v, "lambda_values");
        }
        read_count(sec, "lambda_hold_slots", s.traffic.lambda_hold);
    }
    if (auto sec = child(root, "qos"); sec.IsDefined()) {
        check_keys(sec, "qos", {"embb_min_rate_bps", "urllc_packet_size_bits", "urllc_outage_threshold"});
        read_double(sec, "embb_min_rate_bps", s.qos.embb_min_rate);
        read_double(sec, "urllc_packet_size_bits", s.qos.urllc_packet_size);
        read_double(sec, "urllc_outage_threshold", s.qos.urllc_outage_threshold);
    }
    if (auto sec = child(root, "twin"); sec.IsDefined()) {
        check_keys(sec, "twin",
                   {"delay", "moderate_delay_slots", "significant_delay_slots", "cadence_slots", "summary_window"});
        if (const auto d = read_word(sec, "delay"); !d.empty()) {
            if (d == "minimal") {
                s.twin.delay = DelayLevel::MINIMAL;
            } else if (d == "moderate") {
                s.twin.delay = DelayLevel::MODERATE;
            } else if (d == "significant") {
                s.twin.delay = DelayLevel::SIGNIFICANT;
            } else {
                fail_at(child(sec, "delay").Mark(), "delay must be minimal, moderate or significant");
            }
        }
        read_count(sec, "moderate_delay_slots", s.twin.profile.moderate);
        read_count(sec, "significant_delay_slots", s.twin.profile.significant);
        read_count(sec, "cadence_slots", s.twin.cadence);
        read_count(sec, "summary_window", s.twin.summary_window);
    }
    if (auto sec = child(root, "policy"); sec.IsDefined()) {
        check_keys(sec, "policy", {"urllc_fraction", "exhaustive_cap", "penalty_scale"});
        read_double(sec, "urllc_fraction", s.orthogonal.urllc_fraction);
        read_count(sec, "exhaustive_cap", s.oracle.exhaustive_cap);
        read_double(sec, "penalty_scale", s.oracle.penalty_scale);
    }
    if (auto sec = child(root, "metrics"); sec.IsDefined()) {
        check_keys(sec, "metrics", {"outage_window"});
        read_count(sec, "outage_window", s.outage_window);
    }
    if (auto sec = child(root, "nn"); sec.IsDefined()) {
        check_keys(sec, "nn", {"hidden", "reference_snr_db", "reference_lambda"});
        if (auto v = child(sec, "hidden"); v.IsDefined()) {
            s.nn.hidden.clear();
            for (const double h : read_doubles(v, "hidden")) {
                if (!(h >= 1.0) || std::floor(h) != h) {
                    fail_at(v.Mark(), "hidden widths must be positive integers");
                }
                s.nn.hidden.push_back(static_cast<std::size_t>(h));
            }
        }
        read_double(sec, "reference_snr_db", s.nn.reference_snr_db);
        read_double(sec, "reference_lambda", s.nn.reference_lambda);
    }
    if (auto sec = child(root, "train"); sec.IsDefined()) {
        check_keys(sec, "train",
                   {"learning_rate", "epochs", "batch_size", "seed", "standardize_inputs", "samples", "lambda_min",
                    "lambda_max"});
        read_double(sec, "learning_rate", s.training.train.learning_rate);
        read_count(sec, "epochs", s.training.train.epochs);
        read_count(sec, "batch_size", s.training.train.batch_size);
        read_count(sec, "seed", s.training.train.seed);
        if (auto v = child(sec, "standardize_inputs"); v.IsDefined()) {
            bool b = true;
            if (!v.IsScalar() || !YAML::convert<bool>::decode(v, b)) {
                fail_at(v.Mark(), "'standardize_inputs' must be true or false");
            }
            s.training.train.standardize_inputs = b;
        }
        read_count(sec, "samples", s.training.samples);
        read_double(sec, "lambda_min", s.training.lambda_min);
        read_double(sec, "lambda_max", s.training.lambda_max);
    }
    if (auto sec = child(root, "experiment"); sec.IsDefined()) {
        check_keys(sec, "experiment", {"policies", "lambda_sweep"});
        if (auto v = child(sec, "policies"); v.IsDefined()) {
            if (!v.IsSequence()) {
                fail_at(v.Mark(), "'policies' must be a list");
            }
            s.policies.clear();
            for (const auto& item : v) {
                const auto id = scalar_as<std::string>(item, "policies");
                const auto k = parse_policy(id);
                if (!k) {
                    fail_at(item.Mark(), fmt::format("unknown policy '{}'", id));
                }
                s.policies.push_back(*k);
            }
        }
        if (auto v = child(sec, "lambda_sweep"); v.IsDefined()) {
            s.lambda_sweep = read_doubles(v, "lambda_sweep");
        }
    }

    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot read scenario file " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_scenario(ss.str());
}

} // namespace ntn
