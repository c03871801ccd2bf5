#include "ihope/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ihope/error.hpp"
#include "ihope/random.hpp"
#include "json.hpp"

namespace ihope {

namespace {

constexpr int kFormatVersion = 1;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-8;

std::vector<std::size_t> layer_dims(const MlpConfig &c) {
    return {c.input_dim, c.hidden_dims[0], c.hidden_dims[1], c.hidden_dims[2], c.output_dim};
}

void softmax_rows(Eigen::MatrixXd &z) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double top = z.row(i).maxCoeff();
        z.row(i) = (z.row(i).array() - top).exp();
        z.row(i) /= z.row(i).sum();
    }
}

Eigen::MatrixXd to_matrix(std::span<const std::vector<double>> inputs, std::size_t width) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(inputs.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != width) {
            throw Error(ErrorCode::ArityMismatch, fmt::format("input has {} values, model expects {}", inputs[i].size(), width));
        }
        for (std::size_t j = 0; j < width; ++j) {
            if (!std::isfinite(inputs[i][j])) throw Error(ErrorCode::NonFiniteInput, "non-finite network input");
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = inputs[i][j];
        }
    }
    return x;
}

nlohmann::json layer_json(const DenseLayer &layer) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    }
    std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    return {{"rows", layer.weights.rows()}, {"cols", layer.weights.cols()}, {"weights", w}, {"bias", b}};
}

}  // namespace

void MlpConfig::validate() const {
    if (input_dim < 1) throw Error(ErrorCode::InvalidConfig, "input_dim must be >= 1");
    for (auto h : hidden_dims) {
        if (h < 1) throw Error(ErrorCode::InvalidConfig, "hidden layer widths must be >= 1");
    }
    if (output_dim != kNumCategories) throw Error(ErrorCode::InvalidConfig, "output_dim must be 4");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
    if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
}

MlpModel init_model(const MlpConfig &config) {
    config.validate();
    MlpModel model;
    model.config = config;
    Rng rng(derive_seed(config.seed, "mlp.init"));
    const auto dims = layer_dims(config);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(dims[l]);
        const auto fan_out = static_cast<Eigen::Index>(dims[l + 1]);
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        DenseLayer layer{Eigen::MatrixXd(fan_in, fan_out), Eigen::VectorXd::Zero(fan_out)};
        for (Eigen::Index r = 0; r < fan_in; ++r) {
            for (Eigen::Index c = 0; c < fan_out; ++c) layer.weights(r, c) = scale * standard_normal(rng);
        }
        model.layers.push_back(std::move(layer));
    }
    return model;
}

Eigen::VectorXd logits(const MlpModel &model, std::span<const double> x) {
    if (x.size() != model.config.input_dim) {
        throw Error(ErrorCode::ArityMismatch, fmt::format("input has {} values, model expects {}", x.size(), model.config.input_dim));
    }
    Eigen::RowVectorXd a(static_cast<Eigen::Index>(x.size()));
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!std::isfinite(x[j])) throw Error(ErrorCode::NonFiniteInput, "non-finite network input");
        a(static_cast<Eigen::Index>(j)) = x[j];
    }
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto &layer = model.layers[l];
        Eigen::RowVectorXd z = a * layer.weights + layer.bias.transpose();
        a = l + 1 < model.layers.size() ? Eigen::RowVectorXd(z.cwiseMax(0.0)) : z;
    }
    return a.transpose();
}

Probabilities forward(const MlpModel &model, std::span<const double> x) {
    const Eigen::VectorXd z = logits(model, x);
    const double top = z.maxCoeff();
    Probabilities p{};
    double sum = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] = std::exp(z(static_cast<Eigen::Index>(k)) - top);
        sum += p[k];
    }
    for (double &v : p) v /= sum;
    return p;
}

double loss(std::span<const double> probabilities, std::size_t true_category) {
    if (true_category >= probabilities.size()) throw Error(ErrorCode::OutOfRange, "category index out of range");
    return -std::log(std::max(probabilities[true_category], kProbabilityFloor));
}

MlpGradients grad(const MlpModel &model, std::span<const std::vector<double>> inputs, std::span<const Phq4Category> targets,
                  double *mean_loss) {
    if (inputs.empty()) throw Error(ErrorCode::EmptyData, "gradient of an empty batch");
    if (inputs.size() != targets.size()) throw Error(ErrorCode::LengthMismatch, "inputs and targets differ in length");
    const std::size_t n_layers = model.layers.size();
    const auto batch = static_cast<double>(inputs.size());

    // Forward pass keeping every activation; acts[0] is the input batch.
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(n_layers + 1);
    acts.push_back(to_matrix(inputs, model.config.input_dim));
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto &layer = model.layers[l];
        Eigen::MatrixXd z = acts.back() * layer.weights;
        z.rowwise() += layer.bias.transpose();
        if (l + 1 < n_layers) {
            acts.push_back(z.cwiseMax(0.0));
        } else {
            softmax_rows(z);
            acts.push_back(std::move(z));
        }
    }

    // Softmax + cross-entropy: dL/dz = (p - onehot) / B.
    Eigen::MatrixXd delta = acts.back();
    double total_loss = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto k = static_cast<Eigen::Index>(index_of(targets[i]));
        total_loss -= std::log(std::max(delta(row, k), kProbabilityFloor));
        delta(row, k) -= 1.0;
    }
    delta /= batch;
    if (mean_loss != nullptr) *mean_loss = total_loss / batch;

    MlpGradients grads(n_layers);
    for (std::size_t l = n_layers; l-- > 0;) {
        grads[l].weights = acts[l].transpose() * delta;
        grads[l].bias = delta.colwise().sum().transpose();
        if (l > 0) {
            Eigen::MatrixXd upstream = delta * model.layers[l].weights.transpose();
            // acts[l] is the ReLU output of layer l-1; its derivative is 1 where positive.
            delta = upstream.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
        }
    }
    return grads;
}

MlpModel train(std::span<const std::vector<double>> inputs, std::span<const Phq4Category> targets, const MlpConfig &config) {
    if (inputs.empty()) throw Error(ErrorCode::EmptyData, "training set is empty");
    if (inputs.size() != targets.size()) throw Error(ErrorCode::LengthMismatch, "inputs and targets differ in length");
    MlpModel model = init_model(config);

    MlpGradients m1(model.layers.size()), m2(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto &layer = model.layers[l];
        m1[l] = m2[l] = DenseLayer{Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                                   Eigen::VectorXd::Zero(layer.bias.size())};
    }

    const std::size_t n = inputs.size();
    std::vector<std::size_t> order(n);
    std::vector<std::vector<double>> batch_x;
    std::vector<Phq4Category> batch_y;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(config.seed, "mlp.shuffle", epoch));
        shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t end = std::min(n, begin + config.batch_size);
            batch_x.clear();
            batch_y.clear();
            for (std::size_t i = begin; i < end; ++i) {
                batch_x.push_back(inputs[order[i]]);
                batch_y.push_back(targets[order[i]]);
            }
            double batch_loss = 0.0;
            const auto g = grad(model, batch_x, batch_y, &batch_loss);
            epoch_loss += batch_loss * static_cast<double>(end - begin);

            ++step;
            const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                auto update = [&](auto &param, auto &first, auto &second, const auto &gradient) {
                    first = kBeta1 * first + (1.0 - kBeta1) * gradient;
                    second = kBeta2 * second + (1.0 - kBeta2) * gradient.cwiseProduct(gradient);
                    param.array() -= config.learning_rate * (first.array() / c1) / ((second.array() / c2).sqrt() + kEpsilon);
                };
                update(model.layers[l].weights, m1[l].weights, m2[l].weights, g[l].weights);
                update(model.layers[l].bias, m1[l].bias, m2[l].bias, g[l].bias);
            }
        }
        model.loss_history.push_back(epoch_loss / static_cast<double>(n));
    }
    return model;
}

Phq4Category predict_category(const MlpModel &model, std::span<const double> x) {
    const auto p = forward(model, x);
    // max_element returns the first maximum, i.e. the lower category on ties.
    return static_cast<Phq4Category>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::string mlp_to_json_text(const MlpModel &model) {
    const auto &c = model.config;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto &layer : model.layers) layers.push_back(layer_json(layer));
    nlohmann::json doc = {{"format", "ihope.mlp"},
                          {"version", kFormatVersion},
                          {"config",
                           {{"input_dim", c.input_dim},
                            {"hidden_dims", c.hidden_dims},
                            {"output_dim", c.output_dim},
                            {"learning_rate", c.learning_rate},
                            {"epochs", c.epochs},
                            {"batch_size", c.batch_size},
                            {"seed", c.seed}}},
                          {"layers", layers},
                          {"loss_history", model.loss_history}};
    return doc.dump();
}

MlpModel mlp_from_json_text(std::string_view text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("format").get<std::string>() != "ihope.mlp") throw Error(ErrorCode::ParseError, "not an MLP model");
        if (doc.at("version").get<int>() != kFormatVersion) throw Error(ErrorCode::ParseError, "unsupported MLP model version");
        MlpModel model;
        const auto &c = doc.at("config");
        model.config.input_dim = c.at("input_dim").get<std::size_t>();
        model.config.hidden_dims = c.at("hidden_dims").get<std::array<std::size_t, 3>>();
        model.config.output_dim = c.at("output_dim").get<std::size_t>();
        model.config.learning_rate = c.at("learning_rate").get<double>();
        model.config.epochs = c.at("epochs").get<std::size_t>();
        model.config.batch_size = c.at("batch_size").get<std::size_t>();
        model.config.seed = c.at("seed").get<std::uint64_t>();
        model.config.validate();
        const auto dims = layer_dims(model.config);
        const auto &layers = doc.at("layers");
        if (layers.size() + 1 != dims.size()) throw Error(ErrorCode::ParseError, "MLP layer count does not match config");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto &j = layers[l];
            const auto rows = j.at("rows").get<Eigen::Index>();
            const auto cols = j.at("cols").get<Eigen::Index>();
            if (static_cast<std::size_t>(rows) != dims[l] || static_cast<std::size_t>(cols) != dims[l + 1]) {
                throw Error(ErrorCode::ParseError, fmt::format("layer {} shape does not chain", l));
            }
            const auto w = j.at("weights").get<std::vector<double>>();
            const auto b = j.at("bias").get<std::vector<double>>();
            if (w.size() != static_cast<std::size_t>(rows * cols) || b.size() != static_cast<std::size_t>(cols)) {
                throw Error(ErrorCode::ParseError, fmt::format("layer {} parameter count mismatch", l));
            }
            DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(cols)};
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index col = 0; col < cols; ++col) layer.weights(r, col) = w[static_cast<std::size_t>(r * cols + col)];
            }
            for (Eigen::Index col = 0; col < cols; ++col) layer.bias(col) = b[static_cast<std::size_t>(col)];
            model.layers.push_back(std::move(layer));
        }
        model.loss_history = doc.at("loss_history").get<std::vector<double>>();
        return model;
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::ParseError, fmt::format("MLP model: {}", e.what()));
    }
}

}  // namespace ihope
