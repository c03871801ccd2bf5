#include "ihope/forest.hpp"

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

struct Sample {
    double x;
    std::size_t row;
};

/// Grows one tree on a bootstrap sample and accumulates impurity decreases.
class TreeBuilder {
public:
    TreeBuilder(std::span<const std::vector<double>> X, std::span<const double> y, const ForestConfig &config,
                std::size_t n_classes, Rng &rng, std::vector<double> &decrease)
        : X_(X), y_(y), config_(config), n_classes_(n_classes), rng_(rng), decrease_(decrease),
          n_features_(X.front().size()), features_per_split_(config.features_per_split.resolve(n_features_)) {}

    DecisionTree build(std::vector<std::size_t> rows) {
        DecisionTree tree;
        grow(tree, std::move(rows), 0);
        return tree;
    }

private:
    bool classification() const { return config_.mode == ForestMode::Classification; }

    /// n times the node impurity (Gini or variance), plus the leaf payload.
    double weighted_impurity(const std::vector<std::size_t> &rows, std::vector<double> &value) const {
        const auto n = static_cast<double>(rows.size());
        if (classification()) {
            value.assign(n_classes_, 0.0);
            for (std::size_t r : rows) value[static_cast<std::size_t>(y_[r])] += 1.0;
            double sq = 0.0;
            for (double c : value) sq += c * c;
            return n - sq / n;
        }
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t r : rows) {
            sum += y_[r];
            sum_sq += y_[r] * y_[r];
        }
        value.assign(1, sum / n);
        return std::max(0.0, sum_sq - sum * sum / n);
    }

    int grow(DecisionTree &tree, std::vector<std::size_t> rows, std::size_t depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        std::vector<double> value;
        const double parent = weighted_impurity(rows, value);
        tree.nodes[static_cast<std::size_t>(id)].value = value;
        if (depth >= config_.max_depth || rows.size() < config_.min_samples_split || parent <= 1e-12) return id;

        const auto candidates = draw_features();
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_children = parent;
        std::vector<Sample> sorted(rows.size());
        for (std::size_t f : candidates) {
            for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {X_[rows[i]][f], rows[i]};
            std::sort(sorted.begin(), sorted.end(),
                      [](const Sample &a, const Sample &b) { return a.x < b.x || (a.x == b.x && a.row < b.row); });
            scan_feature(sorted, static_cast<int>(f), best_feature, best_threshold, best_children);
        }
        const double gain = parent - best_children;
        if (best_feature < 0 || gain <= 1e-12 * std::max(1.0, parent)) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            (X_[r][static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right).push_back(r);
        }
        decrease_[static_cast<std::size_t>(best_feature)] += gain;
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(tree, std::move(left), depth + 1);
        const int r = grow(tree, std::move(right), depth + 1);
        auto &node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l;
        node.right = r;
        node.value.clear();
        return id;
    }

    /// Evaluates every midpoint between consecutive distinct values. Only a
    /// strictly better split replaces the incumbent, so ties keep the lower
    /// feature index and then the lower threshold.
    void scan_feature(const std::vector<Sample> &sorted, int feature, int &best_feature, double &best_threshold,
                      double &best_children) const {
        const std::size_t n = sorted.size();
        if (classification()) {
            std::vector<double> left(n_classes_, 0.0), right(n_classes_, 0.0);
            for (const auto &s : sorted) right[static_cast<std::size_t>(y_[s.row])] += 1.0;
            double left_sq = 0.0;
            double right_sq = 0.0;
            for (double c : right) right_sq += c * c;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto k = static_cast<std::size_t>(y_[sorted[i].row]);
                left_sq += 2.0 * left[k] + 1.0;
                right_sq -= 2.0 * right[k] - 1.0;
                left[k] += 1.0;
                right[k] -= 1.0;
                if (!(sorted[i].x < sorted[i + 1].x)) continue;
                const auto nl = static_cast<double>(i + 1);
                const auto nr = static_cast<double>(n - i - 1);
                const double children = (nl - left_sq / nl) + (nr - right_sq / nr);
                consider(children, sorted[i].x, sorted[i + 1].x, feature, best_feature, best_threshold, best_children);
            }
            return;
        }
        double total = 0.0, total_sq = 0.0;
        for (const auto &s : sorted) {
            total += y_[s.row];
            total_sq += y_[s.row] * y_[s.row];
        }
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double v = y_[sorted[i].row];
            sum += v;
            sum_sq += v * v;
            if (!(sorted[i].x < sorted[i + 1].x)) continue;
            const auto nl = static_cast<double>(i + 1);
            const auto nr = static_cast<double>(n - i - 1);
            const double rs = total - sum;
            const double rsq = total_sq - sum_sq;
            const double children = std::max(0.0, sum_sq - sum * sum / nl) + std::max(0.0, rsq - rs * rs / nr);
            consider(children, sorted[i].x, sorted[i + 1].x, feature, best_feature, best_threshold, best_children);
        }
    }

    static void consider(double children, double lo, double hi, int feature, int &best_feature, double &best_threshold,
                         double &best_children) {
        if (!(children < best_children)) return;
        double mid = lo + (hi - lo) / 2.0;
        if (!(mid < hi)) mid = lo;
        best_children = children;
        best_feature = feature;
        best_threshold = mid;
    }

    std::vector<std::size_t> draw_features() {
        std::vector<std::size_t> all(n_features_);
        std::iota(all.begin(), all.end(), std::size_t{0});
        if (features_per_split_ >= n_features_) return all;
        for (std::size_t i = 0; i < features_per_split_; ++i) {
            const std::size_t j = i + uniform_index(rng_, n_features_ - i);
            std::swap(all[i], all[j]);
        }
        all.resize(features_per_split_);
        std::sort(all.begin(), all.end());
        return all;
    }

    std::span<const std::vector<double>> X_;
    std::span<const double> y_;
    const ForestConfig &config_;
    std::size_t n_classes_;
    Rng &rng_;
    std::vector<double> &decrease_;
    std::size_t n_features_;
    std::size_t features_per_split_;
};

nlohmann::json config_to_json(const ForestConfig &c) {
    std::string fps;
    switch (c.features_per_split.kind) {
        case FeaturesPerSplit::Kind::Sqrt: fps = "sqrt"; break;
        case FeaturesPerSplit::Kind::All: fps = "all"; break;
        case FeaturesPerSplit::Kind::Count: fps = std::to_string(c.features_per_split.count); break;
    }
    return {{"n_trees", c.n_trees},
            {"max_depth", c.max_depth},
            {"min_samples_split", c.min_samples_split},
            {"features_per_split", fps},
            {"mode", c.mode == ForestMode::Classification ? "classification" : "regression"},
            {"seed", c.seed}};
}

ForestConfig config_from_json(const nlohmann::json &j) {
    ForestConfig c;
    c.n_trees = j.at("n_trees").get<std::size_t>();
    c.max_depth = j.at("max_depth").get<std::size_t>();
    c.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    const auto fps = j.at("features_per_split").get<std::string>();
    if (fps == "sqrt") {
        c.features_per_split = FeaturesPerSplit::sqrt();
    } else if (fps == "all") {
        c.features_per_split = FeaturesPerSplit::all();
    } else {
        c.features_per_split = FeaturesPerSplit::fixed(std::stoul(fps));
    }
    c.mode = j.at("mode").get<std::string>() == "regression" ? ForestMode::Regression : ForestMode::Classification;
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

nlohmann::json model_body(const ForestModel &model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto &tree : model.trees) {
        nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                       left = nlohmann::json::array(), right = nlohmann::json::array(), value = nlohmann::json::array();
        for (const auto &node : tree.nodes) {
            feature.push_back(node.feature);
            threshold.push_back(node.threshold);
            left.push_back(node.left);
            right.push_back(node.right);
            value.push_back(node.value);
        }
        trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
    }
    return {{"format", "ihope.forest"},
            {"version", kFormatVersion},
            {"config", config_to_json(model.config)},
            {"n_features", model.n_features},
            {"n_classes", model.n_classes},
            {"degenerate", model.degenerate},
            {"importances", model.importances},
            {"trees", trees}};
}

std::string digest_of(const ForestModel &model) {
    return fmt::format("{:016x}", fnv1a64(model_body(model).dump()));
}

}  // namespace

std::size_t FeaturesPerSplit::resolve(std::size_t p) const {
    std::size_t m = p;
    switch (kind) {
        case Kind::Sqrt: m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p)) - 1e-12)); break;
        case Kind::All: m = p; break;
        case Kind::Count: m = count; break;
    }
    return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(p, 1));
}

void ForestConfig::validate() const {
    if (n_trees < 1) throw Error(ErrorCode::InvalidConfig, "forest needs n_trees >= 1");
    if (max_depth < 1) throw Error(ErrorCode::InvalidConfig, "forest needs max_depth >= 1");
    if (min_samples_split < 2) throw Error(ErrorCode::InvalidConfig, "forest needs min_samples_split >= 2");
    if (features_per_split.kind == FeaturesPerSplit::Kind::Count && features_per_split.count < 1) {
        throw Error(ErrorCode::InvalidConfig, "features_per_split count must be >= 1");
    }
}

const TreeNode &DecisionTree::leaf_for(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto &node = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    return nodes[i];
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes[i].is_leaf()) {
            level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

ForestModel fit_forest(std::span<const std::vector<double>> X, std::span<const double> y, const ForestConfig &config) {
    config.validate();
    if (X.empty()) throw Error(ErrorCode::EmptyData, "forest fit on zero samples");
    if (X.size() != y.size()) throw Error(ErrorCode::LengthMismatch, fmt::format("{} rows but {} targets", X.size(), y.size()));
    const std::size_t p = X.front().size();
    if (p == 0) throw Error(ErrorCode::ArityMismatch, "forest fit on zero features");
    for (const auto &row : X) {
        if (row.size() != p) throw Error(ErrorCode::ArityMismatch, "rows of unequal width");
    }

    ForestModel model;
    model.config = config;
    model.n_features = p;
    if (config.mode == ForestMode::Classification) {
        double top = 0.0;
        for (double v : y) {
            if (v < 0.0 || v != std::floor(v)) throw Error(ErrorCode::InvalidConfig, "class targets must be integers >= 0");
            top = std::max(top, v);
        }
        model.n_classes = static_cast<std::size_t>(top) + 1;
    }
    const bool constant_target = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });

    const std::size_t n = X.size();
    std::vector<double> averaged(p, 0.0);
    std::size_t contributing = 0;
    model.trees.reserve(config.n_trees);
    for (std::size_t t = 0; t < config.n_trees; ++t) {
        Rng rng(derive_seed(config.seed, "forest.tree", t));
        std::vector<std::size_t> rows(n);
        for (auto &r : rows) r = uniform_index(rng, n);
        std::vector<double> decrease(p, 0.0);
        TreeBuilder builder(X, y, config, model.n_classes, rng, decrease);
        model.trees.push_back(builder.build(std::move(rows)));
        const double total = std::accumulate(decrease.begin(), decrease.end(), 0.0);
        if (total > 0.0) {
            for (std::size_t f = 0; f < p; ++f) averaged[f] += decrease[f] / total;
            ++contributing;
        }
    }
    if (constant_target || contributing == 0) {
        model.degenerate = true;
        model.importances.assign(p, 1.0 / static_cast<double>(p));
    } else {
        const double total = std::accumulate(averaged.begin(), averaged.end(), 0.0);
        model.importances.resize(p);
        for (std::size_t f = 0; f < p; ++f) model.importances[f] = averaged[f] / total;
    }
    model.training_digest = digest_of(model);
    return model;
}

int predict_class(const ForestModel &model, std::span<const double> x) {
    if (x.size() != model.n_features) {
        throw Error(ErrorCode::ArityMismatch, fmt::format("model expects {} features, got {}", model.n_features, x.size()));
    }
    if (model.config.mode != ForestMode::Classification) {
        throw Error(ErrorCode::InvalidConfig, "predict_class on a regression forest");
    }
    std::vector<std::size_t> votes(std::max<std::size_t>(model.n_classes, 1), 0);
    for (const auto &tree : model.trees) {
        const auto &counts = tree.leaf_for(x).value;
        const auto top = std::max_element(counts.begin(), counts.end());  // first maximum = lowest class
        ++votes[static_cast<std::size_t>(top - counts.begin())];
    }
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

double predict(const ForestModel &model, std::span<const double> x) {
    if (model.config.mode == ForestMode::Classification) return predict_class(model, x);
    if (x.size() != model.n_features) {
        throw Error(ErrorCode::ArityMismatch, fmt::format("model expects {} features, got {}", model.n_features, x.size()));
    }
    double sum = 0.0;
    for (const auto &tree : model.trees) sum += tree.leaf_for(x).value.front();
    return sum / static_cast<double>(model.trees.size());
}

std::string forest_to_json_text(const ForestModel &model) {
    auto doc = model_body(model);
    doc["training_digest"] = model.training_digest;
    return doc.dump();
}

ForestModel forest_from_json_text(std::string_view text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("format").get<std::string>() != "ihope.forest") throw Error(ErrorCode::ParseError, "not a forest model");
        if (doc.at("version").get<int>() != kFormatVersion) {
            throw Error(ErrorCode::ParseError, fmt::format("unsupported forest model version {}", doc.at("version").dump()));
        }
        ForestModel model;
        model.config = config_from_json(doc.at("config"));
        model.n_features = doc.at("n_features").get<std::size_t>();
        model.n_classes = doc.at("n_classes").get<std::size_t>();
        model.degenerate = doc.at("degenerate").get<bool>();
        model.importances = doc.at("importances").get<std::vector<double>>();
        for (const auto &t : doc.at("trees")) {
            DecisionTree tree;
            const auto feature = t.at("feature").get<std::vector<int>>();
            const auto threshold = t.at("threshold").get<std::vector<double>>();
            const auto left = t.at("left").get<std::vector<int>>();
            const auto right = t.at("right").get<std::vector<int>>();
            const auto value = t.at("value").get<std::vector<std::vector<double>>>();
            for (std::size_t i = 0; i < feature.size(); ++i) {
                tree.nodes.push_back(TreeNode{feature[i], threshold[i], left[i], right[i], value[i]});
            }
            model.trees.push_back(std::move(tree));
        }
        model.training_digest = doc.at("training_digest").get<std::string>();
        return model;
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::ParseError, fmt::format("forest model: {}", e.what()));
    }
}

}  // namespace ihope
