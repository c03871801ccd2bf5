// Acceptance gate: one line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli.hpp"
#include "ihope/dataset.hpp"
#include "ihope/error.hpp"
#include "ihope/defaults.hpp"
#include "ihope/experiments.hpp"
#include "ihope/features.hpp"
#include "ihope/forest.hpp"
#include "ihope/kmeans.hpp"
#include "ihope/labels.hpp"
#include "ihope/mlp.hpp"
#include "ihope/random.hpp"
#include "ihope/synth.hpp"
#include "oracles.hpp"

using namespace ihope;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome with_budget(Outcome o, double elapsed, double budget) {
    if (elapsed >= budget) {
        o.pass = false;
        o.detail += fmt::format(" (over budget: {:.2f}s >= {}s)", elapsed, budget);
    }
    return o;
}

Outcome categorization() {
    // Table of expected categories for scores 0..12.
    const std::array<Phq4Category, 13> expected{
        Phq4Category::Normal,   Phq4Category::Normal,   Phq4Category::Normal,   Phq4Category::Normal,
        Phq4Category::Mild,     Phq4Category::Mild,     Phq4Category::Mild,     Phq4Category::Moderate,
        Phq4Category::Moderate, Phq4Category::Moderate, Phq4Category::Severe,   Phq4Category::Severe,
        Phq4Category::Severe};
    int wrong = 0;
    for (int s = 0; s <= 12; ++s) wrong += categorize_phq4(s) != expected[static_cast<std::size_t>(s)];
    bool rejects = true;
    for (int s : {-1, 13}) {
        try {
            (void)categorize_phq4(s);
            rejects = false;
        } catch (const Error &e) {
            rejects &= e.code() == ErrorCode::OutOfRange;
        }
    }
    return {wrong == 0 && rejects, fmt::format("13 scores, {} mismatches, out-of-range rejected: {}", wrong, rejects)};
}

Outcome gradients() {
    std::size_t probes = 0, nets = 0, redrawn = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; nets < 4; ++seed) {
        const auto model = oracle::random_probe_net(seed);
        Rng rng(derive_seed(seed, "acceptance.inputs"));
        std::vector<std::vector<double>> xs(8, std::vector<double>(5));
        std::vector<Phq4Category> ys;
        for (auto &x : xs) {
            for (auto &v : x) v = standard_normal(rng);
            ys.push_back(static_cast<Phq4Category>(uniform_index(rng, kNumCategories)));
        }
        if (!oracle::differentiable_at(model, xs, ys)) {
            ++redrawn;
            continue;
        }
        ++nets;
        for (const auto &p : oracle::finite_difference_probes(model, xs, ys, 1e-5)) {
            worst = std::max(worst, p.relative_error);
            ++probes;
        }
    }
    return {probes >= 100 && worst <= 1e-4,
            fmt::format("{} probes on {} nets ({} redrawn at a kink or the loss floor), max relative error {:.3e}", probes,
                        nets, redrawn, worst)};
}

Outcome probabilities() {
    Rng rng(2024);
    auto model = init_model(MlpConfig{});
    std::size_t bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        // Every 10th pass rescales the output layer so that logits reach 1e3.
        auto m = model;
        std::vector<double> x(5);
        for (auto &v : x) v = uniform(rng, -10.0, 10.0);
        if (i % 10 == 0) {
            const auto z = logits(m, x);
            const double top = z.cwiseAbs().maxCoeff();
            if (top > 0.0) {
                const double scale = uniform(rng, 1.0, 1000.0) / top;
                m.layers.back().weights *= scale;
                m.layers.back().bias *= scale;
            }
        }
        const auto p = forward(m, x);
        const double sum = std::accumulate(p.begin(), p.end(), 0.0);
        bool ok = std::abs(sum - 1.0) <= 1e-9;
        for (double v : p) ok &= std::isfinite(v) && v >= 0.0;
        worst = std::max(worst, std::abs(sum - 1.0));
        bad += !ok;
    }
    auto extreme = model;
    for (auto &l : extreme.layers) {
        l.weights.setZero();
        l.bias.setZero();
    }
    extreme.layers.back().bias << 1000.0, -1000.0, 0.0, 1000.0;
    const auto p = forward(extreme, std::vector<double>(5, 0.0));
    const bool finite = std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); });
    return {bad == 0 && finite, fmt::format("10000 passes, {} invalid, max |sum - 1| = {:.2e}", bad, worst)};
}

Outcome forest_importances() {
    Rng rng(77);
    const std::size_t p = 6;
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 500; ++i) {
        std::vector<double> x(p);
        for (auto &v : x) v = uniform01(rng);
        y.push_back(x[3] > 0.5 ? 1.0 : 0.0);
        X.push_back(std::move(x));
    }
    ForestConfig cfg;
    cfg.seed = 5;
    const auto m = fit_forest(X, y, cfg);
    const auto &imp = m.importances;
    const double sum = std::accumulate(imp.begin(), imp.end(), 0.0);
    const bool nonneg = std::all_of(imp.begin(), imp.end(), [](double v) { return v >= 0.0; });
    const auto top = static_cast<std::size_t>(std::max_element(imp.begin(), imp.end()) - imp.begin());
    return {nonneg && std::abs(sum - 1.0) <= 1e-9 && imp[3] > 0.9 && top == 3,
            fmt::format("planted importance {:.4f}, ranks #{}, sum {:.12f}", imp[3], top == 3 ? 1 : 0, sum)};
}

/// Random label map over the given names: each label gets 1..6 distinct features.
LabelMap random_label_map(const std::vector<std::string> &names, Rng &rng) {
    LabelMap map;
    for (auto label : kAllLabels) {
        auto pool = names;
        shuffle(pool, rng);
        const std::size_t k = 1 + uniform_index(rng, 6);
        for (std::size_t i = 0; i < k; ++i) {
            map[label].push_back({pool[i], bernoulli(rng, 0.3) ? Direction::Below : Direction::Above});
        }
    }
    return map;
}

struct Triple {
    FeatureSchema schema;
    LabelMap map;
    ThresholdTable thresholds;
    std::vector<double> record;
};

Triple random_triple(Rng &rng) {
    Triple t;
    t.schema.id = "acceptance";
    for (int j = 0; j < 12; ++j) t.schema.names.push_back(fmt::format("f{}", j));
    t.map = random_label_map(t.schema.names, rng);
    t.record.resize(t.schema.size());
    for (std::size_t j = 0; j < t.schema.size(); ++j) {
        const double thr = std::round(uniform(rng, 0.0, 10.0) * 4.0) / 4.0;
        t.thresholds.set(t.schema.names[j], thr);
        // A share of cells sit exactly on the threshold to exercise the strict comparison.
        t.record[j] = bernoulli(rng, 0.15) ? thr : std::round(uniform(rng, 0.0, 10.0) * 4.0) / 4.0;
    }
    return t;
}

Outcome init_score_oracle() {
    Rng rng(505);
    std::size_t mismatches = 0, checks = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto t = random_triple(rng);
        const BoundLabelMap bound(t.map, t.schema);
        const auto label = kAllLabels[uniform_index(rng, kNumLabels)];
        const int got = init_score(t.record, label, bound, t.thresholds);
        mismatches += got != oracle::init_score_brute(t.record, t.schema.names, t.map[label], t.thresholds);
        ++checks;
    }
    return {mismatches == 0, fmt::format("{} triples, {} mismatches", checks, mismatches)};
}

Outcome final_score_consistency() {
    Rng rng(606);
    double worst = 0.0;
    std::size_t checks = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto t = random_triple(rng);
        const BoundLabelMap bound(t.map, t.schema);
        const auto label = kAllLabels[uniform_index(rng, kNumLabels)];
        const auto &features = t.map[label];
        std::vector<double> imp(features.size());
        double total = 0.0;
        for (auto &v : imp) total += (v = uniform01(rng));
        for (auto &v : imp) v /= total;
        std::vector<double> lo(t.schema.size()), hi(t.schema.size());
        for (std::size_t j = 0; j < lo.size(); ++j) {
            lo[j] = uniform(rng, 0.0, 3.0);
            hi[j] = lo[j] + uniform(rng, 1.0, 8.0);
        }
        const MinMaxScaler scaler(lo, hi);
        const auto weights = compute_nwfi(imp, scaler, t.record, label, bound);
        const double got = final_score(t.record, label, bound, t.thresholds, weights);

        // Oracle: sum importance * clamp(normalized) over the features counted by the brute-force comparison.
        double expected = 0.0;
        int counted = 0;
        for (std::size_t k = 0; k < features.size(); ++k) {
            const std::size_t j = t.schema.index_of(features[k].feature);
            const double v = t.record[j];
            const double thr = t.thresholds.at(features[k].feature);
            const bool pass = features[k].direction == Direction::Above ? v > thr : v < thr;
            if (!pass) continue;
            ++counted;
            const double norm = std::clamp((v - lo[j]) / (hi[j] - lo[j]), 0.0, 1.0);
            expected += imp[k] * norm;
        }
        if (counted != init_score(t.record, label, bound, t.thresholds)) worst = std::max(worst, 1.0);
        worst = std::max(worst, std::abs(got - expected));
        ++checks;
    }
    return {worst <= 1e-12, fmt::format("{} triples, max |delta| = {:.3e}", checks, worst)};
}

Outcome pearson_oracle() {
    Rng rng(707);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        const std::size_t n = 3 + uniform_index(rng, 500);
        std::vector<double> x(n), y(n);
        const double rho = uniform(rng, -1.0, 1.0);
        const double offset = uniform(rng, -100.0, 100.0);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = offset + uniform(rng, 0.1, 10.0) * standard_normal(rng);
            y[i] = rho * x[i] + standard_normal(rng);
        }
        // Naive two-pass covariance.
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double cxy = 0.0, vx = 0.0, vy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cxy += (x[i] - mx) * (y[i] - my);
            vx += (x[i] - mx) * (x[i] - mx);
            vy += (y[i] - my) * (y[i] - my);
        }
        const double expected = cxy / std::sqrt(vx * vy);
        worst = std::max(worst, std::abs(pearson(x, y) - expected));
    }
    return {worst <= 1e-12, fmt::format("100 series, max |delta| = {:.3e}", worst)};
}

Outcome oversampling() {
    Rng rng(808);
    bool ok = true;
    std::string note;
    for (int trial = 0; trial < 50 && ok; ++trial) {
        const std::size_t n = 20 + uniform_index(rng, 300);
        std::vector<Phq4Category> labels(n);
        // Skewed class mix, sometimes with an absent class.
        for (auto &l : labels) {
            const double u = uniform01(rng);
            l = u < 0.55 ? Phq4Category::Normal : u < 0.8 ? Phq4Category::Mild : u < 0.95 ? Phq4Category::Moderate : Phq4Category::Severe;
        }
        const auto split = split_holdout(n, 0.2, derive_seed(9, "acceptance.split", static_cast<std::uint64_t>(trial)));
        const auto out = oversample(split.train, labels, static_cast<std::uint64_t>(trial));
        std::array<std::size_t, kNumCategories> counts{}, before{};
        for (std::size_t i : split.train) ++before[index_of(labels[i])];
        for (std::size_t i : out) {
            ++counts[index_of(labels[i])];
            if (std::find(split.train.begin(), split.train.end(), i) == split.train.end()) {
                ok = false;
                note = "drew a non-training index";
            }
        }
        const std::size_t majority = *std::max_element(before.begin(), before.end());
        for (std::size_t c = 0; c < kNumCategories; ++c) {
            const std::size_t want = before[c] == 0 ? 0 : majority;
            if (counts[c] != want) {
                ok = false;
                note = fmt::format("class {} has {} after, expected {}", c, counts[c], want);
            }
        }
    }
    return {ok, ok ? "50 skewed splits balanced to the majority count, training indices only" : note};
}

SynthConfig ordering_population() {
    SynthConfig cfg;
    cfg.n_users = 20;
    cfg.records_per_user = 200;
    cfg.signal_strength = 0.9;
    cfg.heterogeneity = 0.8;
    cfg.label_noise = 0.1;
    cfg.seed = 42;
    return cfg;
}

struct OrderingRun {
    double b1 = 0.0, b2 = 0.0, ih = 0.0;
    double seconds = 0.0;
};

OrderingRun run_ordering() {
    const auto t0 = Clock::now();
    const auto users = generate(ordering_population());
    const auto schema = default_raw_schema();
    PipelineOptions opts;
    opts.jobs = 0;
    OrderingRun r;
    r.b1 = run_pipeline(users, schema, PipelineSpec::preset(PipelineKind::Baseline1, 42), opts).report.accuracy;
    r.b2 = run_pipeline(users, schema, PipelineSpec::preset(PipelineKind::Baseline2, 42), opts).report.accuracy;
    r.ih = run_pipeline(users, schema, PipelineSpec::preset(PipelineKind::IHope, 42), opts).report.accuracy;
    r.seconds = seconds_since(t0);
    return r;
}

Outcome chance_probe() {
    SynthConfig cfg;
    cfg.n_users = 20;
    cfg.records_per_user = 200;
    cfg.heterogeneity = 0.0;
    cfg.seed = 1111;
    const auto truth = ground_truth(cfg);
    // Features wired to no label latent in any persona carry no category signal.
    const std::vector<std::string> features{"loc_food", "voice_study"};
    for (const auto &p : truth.personas) {
        for (const auto &list : p.active) {
            for (const auto &f : features) {
                if (std::find(list.begin(), list.end(), f) != list.end()) return {false, f + " is wired to a label"};
            }
        }
    }
    const auto users = generate(cfg);
    const auto r = motivation_probe(users, default_raw_schema(), features, PipelineOptions{}, 42);
    const double acc = r.report.accuracy;
    return {std::abs(acc - 0.25) <= 0.07, fmt::format("accuracy {:.4f} on {} test records", acc, r.report.n_test)};
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / fmt::format("ihope_acceptance_{}", Clock::now().time_since_epoch().count());
    auto call = [](std::vector<std::string> args) {
        args.insert(args.begin(), "ihope");
        std::vector<const char *> argv;
        for (const auto &a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        if (code != 0) std::cerr << err.str();
        return code;
    };
    const auto data = root / "data";
    int codes = call({"synth", "--users", "20", "--records", "200", "--heterogeneity", "0.8", "--seed", "7", "--out", data.string()});
    for (const char *run : {"run1", "run2"}) {
        codes |= call({"run", "--spec", "ihope", "--seed", "42", "--jobs", "0", "--data", (data / "data.csv").string(),
                       "--out", (root / run).string()});
    }
    auto slurp = [](const std::filesystem::path &p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string a = slurp(root / "run1" / "report.json");
    const std::string b = slurp(root / "run2" / "report.json");
    std::error_code ec;
    std::filesystem::remove_all(root, ec);
    const bool ok = codes == 0 && !a.empty() && a == b;
    return {ok, fmt::format("exit codes ok: {}, report.json {} bytes, identical: {}", codes == 0, a.size(), a == b)};
}

Outcome kmeans_blobs() {
    Rng rng(1313);
    std::vector<std::vector<double>> pts;
    for (int c = 0; c < 5; ++c) {
        const double cx = 8.0 * std::cos(2.0 * 3.14159265358979 * c / 5.0);
        const double cy = 8.0 * std::sin(2.0 * 3.14159265358979 * c / 5.0);
        for (int i = 0; i < 60; ++i) pts.push_back({cx + standard_normal(rng), cy + standard_normal(rng), standard_normal(rng)});
    }
    const auto v = kmeans_validate(pts, 5, 10, 13);
    const auto &h = v.clustering.inertia_history;
    bool monotone = !h.empty();
    for (std::size_t i = 1; i < h.size(); ++i) monotone &= h[i] <= h[i - 1] * (1.0 + 1e-12);
    return {v.silhouette > 0.5 && monotone,
            fmt::format("silhouette {:.4f}, {} Lloyd steps, inertia non-increasing: {}", v.silhouette, h.size(), monotone)};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const std::string &name, Outcome o) {
        std::cout << fmt::format("[{}] {:>2} {}: {}", o.pass ? "PASS" : "FAIL", id, name, o.detail) << std::endl;
        failures += !o.pass;
    };
    auto timed = [&](int id, const std::string &name, double budget, const std::function<Outcome()> &fn) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = seconds_since(t0);
        o.detail += fmt::format(" [{:.2f}s]", s);
        report(id, name, with_budget(o, s, budget));
    };

    timed(1, "PHQ-4 categorization table", 1.0, categorization);
    timed(2, "MLP gradient vs finite differences", 5.0, gradients);
    timed(3, "softmax validity up to logit 1e3", 5.0, probabilities);
    timed(4, "forest importances on planted data", 30.0, forest_importances);
    timed(5, "init_score vs brute-force count", 5.0, init_score_oracle);
    timed(6, "final_score equals NWFI sum over passing features", 5.0, final_score_consistency);
    timed(7, "pearson vs two-pass oracle", 1.0, pearson_oracle);
    timed(8, "oversampling balance", 1.0, oversampling);

    OrderingRun ordering;
    std::string ordering_error;
    try {
        ordering = run_ordering();
    } catch (const std::exception &e) {
        ordering_error = e.what();
    }
    if (!ordering_error.empty()) {
        report(9, "planted ordering ihope >= baseline2 >= baseline1", {false, "exception: " + ordering_error});
        report(10, "ihope accuracy >= 0.85", {false, "exception: " + ordering_error});
    } else {
        const bool order = ordering.ih >= ordering.b2 && ordering.b2 >= ordering.b1 && ordering.ih - ordering.b1 >= 0.10;
        const std::string accs = fmt::format("baseline1 {:.4f}, baseline2 {:.4f}, ihope {:.4f} [{:.1f}s]", ordering.b1,
                                             ordering.b2, ordering.ih, ordering.seconds);
        report(9, "planted ordering ihope >= baseline2 >= baseline1",
               with_budget({order, accs + fmt::format(", gap {:.4f}", ordering.ih - ordering.b1)}, ordering.seconds, 300.0));
        report(10, "ihope accuracy >= 0.85", with_budget({ordering.ih >= 0.85, accs}, ordering.seconds, 300.0));
    }

    timed(11, "two-noise-feature probe at chance", 60.0, chance_probe);
    timed(12, "byte-identical reports from two runs", 600.0, determinism);
    timed(13, "k-means on separated blobs", 10.0, kmeans_blobs);

    std::cout << fmt::format("{} of 13 criteria passed", 13 - failures) << std::endl;
    return failures == 0 ? 0 : 1;
}
