#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ihope/dataset.hpp"

namespace ihope {

struct MlpConfig {
    std::size_t input_dim = 5;
    std::array<std::size_t, 3> hidden_dims{64, 32, 16};
    std::size_t output_dim = kNumCategories;
    double learning_rate = 0.001;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig.
    void validate() const;
};

/// Row-vector convention: out = in * weights + bias, weights is fan_in x fan_out.
struct DenseLayer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

struct MlpModel {
    MlpConfig config;
    std::vector<DenseLayer> layers;  // three ReLU layers, then the softmax layer
    std::vector<double> loss_history;  // mean training loss per epoch
};

/// Gradients share the layer shapes of the model.
using MlpGradients = std::vector<DenseLayer>;

using Probabilities = std::array<double, kNumCategories>;

inline constexpr double kProbabilityFloor = 1e-12;

/// He-normal weights (variance 2 / fan_in), zero biases, seeded by config.seed.
MlpModel init_model(const MlpConfig &config);

/// Output-layer pre-activations. Throws ArityMismatch or NonFiniteInput.
Eigen::VectorXd logits(const MlpModel &model, std::span<const double> x);
Probabilities forward(const MlpModel &model, std::span<const double> x);

/// Cross-entropy -log(max(p_true, 1e-12)).
double loss(std::span<const double> probabilities, std::size_t true_category);

/// Mean loss gradient over the batch. `mean_loss`, when given, receives the
/// batch's mean loss at the current parameters.
MlpGradients grad(const MlpModel &model, std::span<const std::vector<double>> inputs,
                  std::span<const Phq4Category> targets, double *mean_loss = nullptr);

/// Mini-batch Adam (beta 0.9 / 0.999, eps 1e-8) for exactly config.epochs
/// epochs, reshuffling each epoch from a seed derived from config.seed.
MlpModel train(std::span<const std::vector<double>> inputs, std::span<const Phq4Category> targets, const MlpConfig &config);

/// Argmax of forward(); ties go to the less severe category.
Phq4Category predict_category(const MlpModel &model, std::span<const double> x);

std::string mlp_to_json_text(const MlpModel &model);
MlpModel mlp_from_json_text(std::string_view text);

}  // namespace ihope
