#pragma once

// Feedforward allocator: ReLU hidden layers, per-resource-block softmax over
// users, trained by imitation of oracle allocations with cross-entropy.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ntn/domain.hpp"
#include "ntn/twin.hpp"

namespace ntn {

inline constexpr std::uint32_t kWeightsFormatVersion = 1;

class NonFiniteError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class Mlp
{
public:
    /// `layer_sizes` = {input, hidden..., output}; output must be a multiple of
    /// `num_users` (one softmax row of num_users entries per resource block).
    static Mlp zeros(std::vector<std::size_t> layer_sizes, std::size_t num_users,
                     std::uint64_t seed = 0);
    /// Glorot-uniform weights, zero biases.
    static Mlp glorot(std::vector<std::size_t> layer_sizes, std::size_t num_users, std::uint64_t seed);

    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    std::size_t input_dim() const { return sizes_.front(); }
    std::size_t output_dim() const { return sizes_.back(); }
    std::size_t num_users() const { return num_users_; }
    std::size_t num_rbs() const { return sizes_.back() / num_users_; }
    std::size_t num_layers() const { return weights_.size(); }
    std::size_t num_params() const;
    std::uint64_t seed() const { return seed_; }

    /// weight(l) maps layer l activations (cols) to layer l+1 pre-activations (rows).
    const Eigen::MatrixXd& weight(std::size_t l) const { return weights_[l]; }
    Eigen::MatrixXd& weight(std::size_t l) { return weights_[l]; }
    const Eigen::VectorXd& bias(std::size_t l) const { return biases_[l]; }
    Eigen::VectorXd& bias(std::size_t l) { return biases_[l]; }

    bool all_finite() const;
    bool operator==(const Mlp& o) const;

private:
    Mlp(std::vector<std::size_t> layer_sizes, std::size_t num_users, std::uint64_t seed);

    std::vector<std::size_t> sizes_;
    std::size_t num_users_;
    std::uint64_t seed_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

/// Hidden widths of the reference architecture.
inline const std::vector<std::size_t> kDefaultHidden{600, 300, 250};

std::vector<std::size_t> mlp_layout(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                    std::size_t output_dim);

/// Flattened network information fed to the allocator:
///   [snr(u, b) / reference_snr  for u, b]
///   [lambda_u / reference_lambda, queue_u / (zeta * reference_lambda)  for u]
///   [min_rate_per_slot / (zeta * reference_lambda), lambda / reference_lambda, epsilon_max]
/// lambda_u is the per-user share of lambda for URLLC users and 0 for eMBB.
struct FeatureEncoder
{
    double reference_snr = 10.0;     // linear
    double reference_lambda = 200.0; // packets/slot

    static std::size_t input_dim(const NetworkLayout& layout);

    Eigen::VectorXd encode(const TwinSnapshot& snapshot, const NetworkLayout& layout,
                           const QoSRequirement& qos) const;
};

/// Softmax probabilities, one row per resource block, one column per user.
using OutputTensor = Eigen::MatrixXd;

OutputTensor forward(const Mlp& net, const Eigen::VectorXd& x);

/// Row-wise argmax, ties to the lowest user id.
AllocationMatrix decode_output(const OutputTensor& y);

struct Sample
{
    Eigen::VectorXd features;
    std::vector<UserId> labels; // one per resource block
};

/// Sum over blocks of per-block cross-entropy, averaged over samples.
double cross_entropy(const Mlp& net, std::span<const Sample> samples);

/// Fraction of blocks whose decoded user matches the label.
double label_accuracy(const Mlp& net, std::span<const Sample> samples);

struct Gradients
{
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// Loss and analytic gradient on one mini-batch.
double loss_and_gradients(const Mlp& net, std::span<const Sample> batch, Gradients& grads);

/// Max relative error of `analytic` against central finite differences.
double compare_gradients(const Mlp& net, const Sample& sample, const Gradients& analytic,
                         double h = 1e-5);

/// Backprop checked against central finite differences.
double grad_check(const Mlp& net, const Sample& sample, double h = 1e-5);

struct TrainConfig
{
    double learning_rate = 1e-3;
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    /// Train on features shifted and scaled to zero mean, unit variance over
    /// the dataset, then fold that map into the first layer. The returned net
    /// takes raw features; the incoming first layer is read as acting on the
    /// standardized ones.
    bool standardize_inputs = true;

    void validate() const;
};

struct LossPoint
{
    std::size_t step = 0; // epochs completed
    double loss = 0.0;    // full training-set cross-entropy
};

struct TrainResult
{
    Mlp net;
    std::vector<LossPoint> loss_curve;
};

/// Plain mini-batch gradient descent. Throws NonFiniteError if the loss blows up.
TrainResult train(Mlp net, std::span<const Sample> dataset, const TrainConfig& cfg);

void save_weights(const Mlp& net, const std::filesystem::path& path);
Mlp load_weights(const std::filesystem::path& path);

} // namespace ntn
