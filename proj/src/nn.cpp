#include "ntn/nn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>

#include <fmt/format.h>

namespace ntn {

Mlp::Mlp(std::vector<std::size_t> layer_sizes, std::size_t num_users, std::uint64_t seed)
    : sizes_(std::move(layer_sizes)), num_users_(num_users), seed_(seed)
{
    if (sizes_.size() < 2) {
        throw std::invalid_argument("an MLP needs at least an input and an output layer");
    }
    for (const auto s : sizes_) {
        if (s == 0) {
            throw std::invalid_argument("layer sizes must be >= 1");
        }
    }
    if (num_users_ == 0 || sizes_.back() % num_users_ != 0) {
        throw std::invalid_argument(fmt::format("output dim {} is not a multiple of num_users {}",
                                                sizes_.back(), num_users_));
    }
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const auto rows = static_cast<Eigen::Index>(sizes_[l + 1]);
        const auto cols = static_cast<Eigen::Index>(sizes_[l]);
        weights_.push_back(Eigen::MatrixXd::Zero(rows, cols));
        biases_.push_back(Eigen::VectorXd::Zero(rows));
    }
}

Mlp Mlp::zeros(std::vector<std::size_t> layer_sizes, std::size_t num_users, std::uint64_t seed)
{
    return Mlp(std::move(layer_sizes), num_users, seed);
}

Mlp Mlp::glorot(std::vector<std::size_t> layer_sizes, std::size_t num_users, std::uint64_t seed)
{
    Mlp net(std::move(layer_sizes), num_users, seed);
    std::mt19937_64 rng(seed);
    for (auto& w : net.weights_) {
        const double s = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        std::uniform_real_distribution<double> d(-s, s);
        // Column-major fill order is part of the determinism contract.
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                w(i, j) = d(rng);
            }
        }
    }
    return net;
}

std::size_t Mlp::num_params() const
{
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    }
    return n;
}

bool Mlp::all_finite() const
{
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (!weights_[l].allFinite() || !biases_[l].allFinite()) {
            return false;
        }
    }
    return true;
}

bool Mlp::operator==(const Mlp& o) const
{
    if (sizes_ != o.sizes_ || num_users_ != o.num_users_ || seed_ != o.seed_) {
        return false;
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (weights_[l] != o.weights_[l] || biases_[l] != o.biases_[l]) {
            return false;
        }
    }
    return true;
}

std::vector<std::size_t> mlp_layout(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                    std::size_t output_dim)
{
    std::vector<std::size_t> sizes{input_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(output_dim);
    return sizes;
}

std::size_t FeatureEncoder::input_dim(const NetworkLayout& layout)
{
    return layout.num_users() * layout.num_rbs() + 2 * layout.num_users() + 3;
}

Eigen::VectorXd FeatureEncoder::encode(const TwinSnapshot& snapshot, const NetworkLayout& layout,
                                       const QoSRequirement& qos) const
{
    const auto& ch = snapshot.channel();
    const auto& tr = snapshot.traffic();
    const std::size_t n_users = layout.num_users();
    const std::size_t n_rbs = layout.num_rbs();
    if (ch.num_users() != n_users || ch.num_rbs() != n_rbs || tr.urllc_queue.size() != n_users) {
        throw std::invalid_argument(
            fmt::format("encode_features: snapshot is {}x{} with {} queues, layout is {}x{}",
                        ch.num_users(), ch.num_rbs(), tr.urllc_queue.size(), n_users, n_rbs));
    }

    Eigen::VectorXd x(static_cast<Eigen::Index>(input_dim(layout)));
    Eigen::Index k = 0;
    for (const double snr : ch.values()) {
        x[k++] = snr / reference_snr;
    }

    const double rate_scale = qos.urllc_packet_size * reference_lambda;
    const auto n_urllc = static_cast<double>(users_of(layout.users, ServiceClass::URLLC).size());
    for (const auto& user : layout.users) {
        const bool urllc = user.service == ServiceClass::URLLC;
        const double lambda_u = urllc ? tr.urllc_rate / n_urllc : 0.0;
        x[k++] = lambda_u / reference_lambda;
        x[k++] = tr.urllc_queue[static_cast<std::size_t>(user.id)] / rate_scale;
    }

    x[k++] = qos.embb_min_rate * layout.slot_duration / rate_scale;
    x[k++] = tr.urllc_rate / reference_lambda;
    x[k++] = qos.urllc_outage_threshold;
    return x;
}

namespace {

struct ForwardCache
{
    std::vector<Eigen::MatrixXd> act; // act[0] = input, act[L] = output logits
    Eigen::MatrixXd probs;
    Eigen::MatrixXd log_norm;         // (num_rbs x batch) log-sum-exp per softmax row
};

void forward_batch(const Mlp& net, const Eigen::MatrixXd& x, ForwardCache& c)
{
    const std::size_t n_layers = net.num_layers();
    c.act.resize(n_layers + 1);
    c.act[0] = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z(net.weight(l).rows(), x.cols());
        z.noalias() = net.weight(l) * c.act[l];
        z.colwise() += net.bias(l);
        if (l + 1 < n_layers) {
            z = z.cwiseMax(0.0);
        }
        if (!z.allFinite()) {
            throw NonFiniteError(fmt::format("non-finite activation at layer {}", l + 1));
        }
        c.act[l + 1] = std::move(z);
    }

    const auto& logits = c.act[n_layers];
    const auto n_users = static_cast<Eigen::Index>(net.num_users());
    const auto n_rbs = static_cast<Eigen::Index>(net.num_rbs());
    c.probs.resize(logits.rows(), logits.cols());
    c.log_norm.resize(n_rbs, logits.cols());
    for (Eigen::Index s = 0; s < logits.cols(); ++s) {
        for (Eigen::Index b = 0; b < n_rbs; ++b) {
            const auto row = logits.col(s).segment(b * n_users, n_users);
            const double m = row.maxCoeff();
            const double sum = (row.array() - m).exp().sum();
            const double lse = m + std::log(sum);
            c.log_norm(b, s) = lse;
            c.probs.col(s).segment(b * n_users, n_users) = (row.array() - lse).exp().matrix();
        }
    }
}

Eigen::MatrixXd gather_features(std::span<const Sample> batch, std::size_t input_dim)
{
    Eigen::MatrixXd x(static_cast<Eigen::Index>(input_dim), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t s = 0; s < batch.size(); ++s) {
        if (static_cast<std::size_t>(batch[s].features.size()) != input_dim) {
            throw std::invalid_argument(fmt::format("sample has {} features, net expects {}",
                                                    batch[s].features.size(), input_dim));
        }
        x.col(static_cast<Eigen::Index>(s)) = batch[s].features;
    }
    return x;
}

void check_labels(const Mlp& net, const Sample& s)
{
    if (s.labels.size() != net.num_rbs()) {
        throw std::invalid_argument(
            fmt::format("sample has {} labels, net has {} blocks", s.labels.size(), net.num_rbs()));
    }
    for (const UserId u : s.labels) {
        if (u != kUnassigned && (u < 0 || static_cast<std::size_t>(u) >= net.num_users())) {
            throw std::invalid_argument(fmt::format("label {} out of range", u));
        }
    }
}

double batch_loss(const Mlp& net, std::span<const Sample> batch, const ForwardCache& c)
{
    const auto n_users = static_cast<Eigen::Index>(net.num_users());
    double loss = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const auto col = static_cast<Eigen::Index>(s);
        for (std::size_t b = 0; b < batch[s].labels.size(); ++b) {
            const UserId u = batch[s].labels[b];
            if (u == kUnassigned) {
                continue;
            }
            const auto rb = static_cast<Eigen::Index>(b);
            loss += c.log_norm(rb, col) - c.act.back()(rb * n_users + u, col);
        }
    }
    return loss / static_cast<double>(batch.size());
}

template <typename T>
void write_pod(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) {
        throw std::runtime_error("weights file truncated");
    }
    return v;
}

constexpr std::array<char, 8> kMagic{'N', 'T', 'N', 'M', 'L', 'P', '\0', '\0'};

} // namespace

OutputTensor forward(const Mlp& net, const Eigen::VectorXd& x)
{
    if (static_cast<std::size_t>(x.size()) != net.input_dim()) {
        throw std::invalid_argument(
            fmt::format("forward: input has {} entries, net expects {}", x.size(), net.input_dim()));
    }
    ForwardCache c;
    forward_batch(net, x, c);
    const auto rows = static_cast<Eigen::Index>(net.num_rbs());
    const auto cols = static_cast<Eigen::Index>(net.num_users());
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajor>(c.probs.data(), rows, cols);
}

AllocationMatrix decode_output(const OutputTensor& y)
{
    AllocationMatrix m(static_cast<std::size_t>(y.rows()), kUnassigned);
    for (Eigen::Index b = 0; b < y.rows(); ++b) {
        Eigen::Index best = 0;
        for (Eigen::Index u = 1; u < y.cols(); ++u) {
            if (y(b, u) > y(b, best)) {
                best = u;
            }
        }
        if (y.cols() > 0) {
            m[static_cast<std::size_t>(b)] = static_cast<UserId>(best);
        }
    }
    return m;
}

double cross_entropy(const Mlp& net, std::span<const Sample> samples)
{
    if (samples.empty()) {
        return 0.0;
    }
    constexpr std::size_t kChunk = 256;
    double total = 0.0;
    ForwardCache c;
    for (std::size_t i = 0; i < samples.size(); i += kChunk) {
        const auto chunk = samples.subspan(i, std::min(kChunk, samples.size() - i));
        for (const auto& s : chunk) {
            check_labels(net, s);
        }
        forward_batch(net, gather_features(chunk, net.input_dim()), c);
        total += batch_loss(net, chunk, c) * static_cast<double>(chunk.size());
    }
    return total / static_cast<double>(samples.size());
}

double label_accuracy(const Mlp& net, std::span<const Sample> samples)
{
    std::size_t hits = 0;
    std::size_t total = 0;
    for (const auto& s : samples) {
        const auto m = decode_output(forward(net, s.features));
        for (std::size_t b = 0; b < m.size(); ++b) {
            if (s.labels[b] == kUnassigned) {
                continue;
            }
            ++total;
            hits += m[b] == s.labels[b] ? 1 : 0;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

double loss_and_gradients(const Mlp& net, std::span<const Sample> batch, Gradients& grads)
{
    if (batch.empty()) {
        throw std::invalid_argument("empty batch");
    }
    for (const auto& s : batch) {
        check_labels(net, s);
    }
    ForwardCache c;
    forward_batch(net, gather_features(batch, net.input_dim()), c);
    const double loss = batch_loss(net, batch, c);

    const auto n_users = static_cast<Eigen::Index>(net.num_users());
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Eigen::MatrixXd delta = c.probs;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const auto col = static_cast<Eigen::Index>(s);
        for (std::size_t b = 0; b < batch[s].labels.size(); ++b) {
            const UserId u = batch[s].labels[b];
            const auto rb = static_cast<Eigen::Index>(b);
            if (u == kUnassigned) {
                delta.col(col).segment(rb * n_users, n_users).setZero();
            } else {
                delta(rb * n_users + u, col) -= 1.0;
            }
        }
    }
    delta *= inv_n;

    const std::size_t n_layers = net.num_layers();
    grads.weights.resize(n_layers);
    grads.biases.resize(n_layers);
    for (std::size_t l = n_layers; l-- > 0;) {
        grads.weights[l].noalias() = delta * c.act[l].transpose();
        grads.biases[l] = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back(net.weight(l).cols(), delta.cols());
            back.noalias() = net.weight(l).transpose() * delta;
            delta = back.cwiseProduct((c.act[l].array() > 0.0).cast<double>().matrix());
        }
    }
    return loss;
}

double compare_gradients(const Mlp& net, const Sample& sample, const Gradients& analytic, double h)
{
    // Below this magnitude both gradients count as zero and the error is absolute.
    constexpr double kFloor = 1e-6;
    Mlp probe = net;
    const std::span<const Sample> one(&sample, 1);
    double worst = 0.0;

    auto check = [&](double& param, double a) {
        const double saved = param;
        param = saved + h;
        const double up = cross_entropy(probe, one);
        param = saved - h;
        const double down = cross_entropy(probe, one);
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(a), std::abs(numeric), kFloor});
        const double rel = std::abs(a - numeric) / denom;
        if (!std::isfinite(rel)) {
            throw NonFiniteError("grad_check produced a non-finite error");
        }
        worst = std::max(worst, rel);
    };

    for (std::size_t l = 0; l < probe.num_layers(); ++l) {
        auto& w = probe.weight(l);
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                check(w(i, j), analytic.weights[l](i, j));
            }
        }
        auto& bias = probe.bias(l);
        for (Eigen::Index i = 0; i < bias.size(); ++i) {
            check(bias[i], analytic.biases[l][i]);
        }
    }
    return worst;
}

double grad_check(const Mlp& net, const Sample& sample, double h)
{
    Gradients g;
    loss_and_gradients(net, std::span<const Sample>(&sample, 1), g);
    return compare_gradients(net, sample, g, h);
}

void TrainConfig::validate() const
{
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be > 0");
    }
    if (epochs == 0) {
        throw std::invalid_argument("epochs must be >= 1");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("batch_size must be >= 1");
    }
}

namespace {

struct InputScaling
{
    Eigen::VectorXd mean;
    Eigen::VectorXd inv_std;
};

InputScaling fit_scaling(std::span<const Sample> data)
{
    const auto dim = data.front().features.size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& s : data) {
        mean += s.features;
    }
    mean /= static_cast<double>(data.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    for (const auto& s : data) {
        var += (s.features - mean).cwiseAbs2();
    }
    var /= static_cast<double>(data.size());
    Eigen::VectorXd inv(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        // Constant features are only centred.
        inv[i] = var[i] > 1e-24 ? 1.0 / std::sqrt(var[i]) : 1.0;
    }
    return {std::move(mean), std::move(inv)};
}

// W x_std + b == (W diag(inv)) x + (b - W diag(inv) mean)
void fold_scaling(Mlp& net, const InputScaling& sc)
{
    net.weight(0) = net.weight(0) * sc.inv_std.asDiagonal();
    net.bias(0) -= net.weight(0) * sc.mean;
}

} // namespace

TrainResult train(Mlp net, std::span<const Sample> dataset, const TrainConfig& cfg)
{
    cfg.validate();
    if (dataset.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    for (const auto& s : dataset) {
        if (static_cast<std::size_t>(s.features.size()) != net.input_dim()) {
            throw std::invalid_argument("train: feature size does not match the net input");
        }
    }

    std::vector<Sample> scaled_copy;
    std::optional<InputScaling> scaling;
    if (cfg.standardize_inputs) {
        scaling = fit_scaling(dataset);
        scaled_copy.reserve(dataset.size());
        for (const auto& s : dataset) {
            scaled_copy.push_back({(s.features - scaling->mean).cwiseProduct(scaling->inv_std), s.labels});
        }
        dataset = scaled_copy;
    }

    TrainResult result{std::move(net), {}};
    Mlp& m = result.net;
    auto record = [&](std::size_t step) {
        const double loss = cross_entropy(m, dataset);
        if (!std::isfinite(loss)) {
            throw NonFiniteError(fmt::format("training loss became non-finite after epoch {}", step));
        }
        result.loss_curve.push_back({step, loss});
    };
    record(0);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed);
    std::vector<Sample> batch;
    Gradients g;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(dataset[order[i]]);
            }
            const double loss = loss_and_gradients(m, batch, g);
            if (!std::isfinite(loss)) {
                throw NonFiniteError(fmt::format(
                    "non-finite loss in epoch {} at batch starting {} (loss={})", epoch, start, loss));
            }
            for (std::size_t l = 0; l < m.num_layers(); ++l) {
                m.weight(l) -= cfg.learning_rate * g.weights[l];
                m.bias(l) -= cfg.learning_rate * g.biases[l];
            }
        }
        record(epoch);
    }
    if (scaling) {
        fold_scaling(m, *scaling);
    }
    return result;
}

void save_weights(const Mlp& net, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    os.write(kMagic.data(), kMagic.size());
    write_pod(os, kWeightsFormatVersion);
    write_pod(os, static_cast<std::uint64_t>(net.seed()));
    write_pod(os, static_cast<std::uint64_t>(net.num_users()));
    write_pod(os, static_cast<std::uint64_t>(net.layer_sizes().size()));
    for (const auto s : net.layer_sizes()) {
        write_pod(os, static_cast<std::uint64_t>(s));
    }
    // Row-major weights, then bias, per layer; native little-endian doubles.
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const auto& w = net.weight(l);
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                write_pod(os, w(i, j));
            }
        }
        for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) {
            write_pod(os, net.bias(l)[i]);
        }
    }
    if (!os) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

Mlp load_weights(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open weights file " + path.string());
    }
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) {
        throw std::runtime_error(path.string() + " is not a weights file");
    }
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kWeightsFormatVersion) {
        throw std::runtime_error(fmt::format("weights format_version {} not supported (expected {})",
                                             version, kWeightsFormatVersion));
    }
    const auto seed = read_pod<std::uint64_t>(is);
    const auto num_users = read_pod<std::uint64_t>(is);
    const auto n_sizes = read_pod<std::uint64_t>(is);
    if (n_sizes < 2 || n_sizes > 64) {
        throw std::runtime_error("weights file has an implausible layer count");
    }
    std::vector<std::size_t> sizes;
    for (std::uint64_t i = 0; i < n_sizes; ++i) {
        sizes.push_back(static_cast<std::size_t>(read_pod<std::uint64_t>(is)));
    }
    Mlp net = Mlp::zeros(sizes, static_cast<std::size_t>(num_users), seed);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        auto& w = net.weight(l);
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                w(i, j) = read_pod<double>(is);
            }
        }
        for (Eigen::Index i = 0; i < net.bias(l).size(); ++i) {
            net.bias(l)[i] = read_pod<double>(is);
        }
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error("weights file has trailing bytes");
    }
    return net;
}

} // namespace ntn
