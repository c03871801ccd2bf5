#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "ihope/dataset.hpp"
#include "ihope/defaults.hpp"
#include "ihope/error.hpp"
#include "ihope/experiments.hpp"
#include "ihope/exports.hpp"
#include "ihope/features.hpp"
#include "ihope/kmeans.hpp"
#include "ihope/labels.hpp"
#include "ihope/random.hpp"
#include "ihope/synth.hpp"

namespace ihope::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Flags {
    std::string config;
    std::string data;
    std::string schema;
    std::string labelmap;
    std::string feature_config;
    std::string spec = "ihope";
    std::string features;
    std::string out = ".";
    std::string fill = "zero";
    std::uint64_t seed = 42;
    std::size_t jobs = 1;
    std::size_t min_points = 160;
    int window = 3;
    std::size_t bins = 30;
    std::size_t kmeans_k = 5;

    std::size_t users = 20;
    std::size_t records = 200;
    double signal = 0.9;
    double heterogeneity = 0.5;
    double label_noise = 0.1;
    double missing_rate = 0.0;
    std::size_t label_every = 1;
};

std::string iso_now() {
    const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
    const auto day = std::chrono::floor<std::chrono::days>(now);
    const std::chrono::hh_mm_ss hms(now - day);
    return fmt::format("{}T{:02}:{:02}:{:02}Z", format_date(day), hms.hours().count(), hms.minutes().count(),
                       hms.seconds().count());
}

std::string read_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string hex_digest(std::string_view bytes) { return fmt::format("{:016x}", fnv1a64(bytes)); }

class Session {
public:
    Session(std::string subcommand, const Flags &flags) : subcommand_(std::move(subcommand)), flags_(flags), started_(iso_now()) {
        if (!flags.config.empty()) note_input("config", flags.config);
    }

    void note_input(const std::string &role, const std::string &path) {
        inputs_.push_back({role, path, hex_digest(read_file(path))});
    }

    fs::path out_dir() const {
        fs::path dir(flags_.out);
        fs::create_directories(dir);
        return dir;
    }

    void write(const fs::path &relative, const std::string &text) {
        const fs::path path = out_dir() / relative;
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
        f << text;
        if (!f) throw Error(ErrorCode::IoError, fmt::format("write failed for {}", path.string()));
        outputs_.push_back(path.string());
    }

    void finish(ordered_json effective) {
        ordered_json m;
        m["format"] = "ihope.manifest";
        m["version"] = 1;
        m["subcommand"] = subcommand_;
        m["config_path"] = flags_.config.empty() ? ordered_json(nullptr) : ordered_json(flags_.config);
        std::string combined;
        ordered_json inputs = ordered_json::array();
        for (const auto &i : inputs_) {
            inputs.push_back({{"role", i.role}, {"path", i.path}, {"digest", i.digest}});
            combined += i.role + ":" + i.digest + ";";
        }
        m["inputs"] = std::move(inputs);
        m["digest"] = hex_digest(combined);
        m["seed"] = flags_.seed;
        m["flags"] = std::move(effective);
        const fs::path manifest = out_dir() / "manifest.json";
        m["outputs"] = outputs_;
        m["started_at"] = started_;
        m["finished_at"] = iso_now();
        std::ofstream f(manifest, std::ios::binary);
        if (!f) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", manifest.string()));
        f << m.dump(2) << '\n';
    }

private:
    struct Input {
        std::string role;
        std::string path;
        std::string digest;
    };
    std::string subcommand_;
    const Flags &flags_;
    std::string started_;
    std::vector<Input> inputs_;
    std::vector<std::string> outputs_;
};

FillPolicy fill_policy(const std::string &name) {
    if (name == "zero") return FillPolicy::Zero;
    if (name == "mean") return FillPolicy::PerFeatureMean;
    throw UsageError(fmt::format("--fill must be zero or mean, got '{}'", name));
}

std::vector<std::string> split_list(const std::string &text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Inputs {
    RawSchema raw_schema;
    FeatureConfig feature_config;
    LabelMap label_map;
    std::vector<UserDataset> users;
};

Inputs load_inputs(Session &session, const Flags &flags, bool need_label_map) {
    if (flags.data.empty()) throw UsageError("--data is required");
    Inputs in;
    if (flags.schema.empty()) {
        in.raw_schema = default_raw_schema();
    } else {
        session.note_input("schema", flags.schema);
        in.raw_schema = load_raw_schema(flags.schema);
    }
    if (flags.feature_config.empty()) {
        in.feature_config = default_feature_config();
    } else {
        session.note_input("feature_config", flags.feature_config);
        in.feature_config = load_feature_config(flags.feature_config);
    }
    if (flags.labelmap.empty()) {
        in.label_map = default_label_map();
    } else if (need_label_map) {
        session.note_input("labelmap", flags.labelmap);
        in.label_map = load_label_map(flags.labelmap);
    }
    session.note_input("data", flags.data);
    auto records = parse_records(flags.data, in.raw_schema);
    records = fill_missing(std::move(records), fill_policy(flags.fill));
    records = align_labels(records, flags.window);
    in.users = filter_users(group_by_user(std::move(records)), flags.min_points);
    if (in.users.empty()) {
        throw Error(ErrorCode::TooFewRecords,
                    fmt::format("no user in {} has >= {} labeled records", flags.data, flags.min_points));
    }
    return in;
}

ordered_json common_flags(const Flags &f) {
    return {{"data", f.data},         {"schema", f.schema}, {"labelmap", f.labelmap}, {"feature_config", f.feature_config},
            {"fill", f.fill},         {"window", f.window}, {"min_points", f.min_points}, {"seed", f.seed},
            {"jobs", f.jobs},         {"out", f.out}};
}

void cmd_synth(const Flags &f, std::ostream &out) {
    Session session("synth", f);
    SynthConfig sc;
    sc.n_users = f.users;
    sc.records_per_user = f.records;
    sc.signal_strength = f.signal;
    sc.heterogeneity = f.heterogeneity;
    sc.label_noise = f.label_noise;
    sc.missing_rate = f.missing_rate;
    sc.label_every_days = f.label_every;
    sc.seed = f.seed;
    const auto records = generate_records(sc);
    const RawSchema schema = default_raw_schema();
    std::ostringstream csv;
    write_records(csv, records, schema);
    session.write("data.csv", csv.str());
    session.write("schema.json", raw_schema_to_json_text(schema));
    session.write("ground_truth.json", ground_truth_to_json_text(ground_truth(sc)));
    session.finish({{"users", f.users},
                    {"records", f.records},
                    {"signal", f.signal},
                    {"heterogeneity", f.heterogeneity},
                    {"label_noise", f.label_noise},
                    {"missing_rate", f.missing_rate},
                    {"label_every", f.label_every},
                    {"seed", f.seed},
                    {"out", f.out}});
    out << fmt::format("wrote {} records for {} users to {}\n", records.size(), f.users, f.out);
}

void cmd_stats(const Flags &f, std::ostream &out) {
    Session session("stats", f);
    const Inputs in = load_inputs(session, f, false);
    std::ostringstream dist;
    dist << "user_id,Normal,Mild,Moderate,Severe\n";
    ClassCounts total{};
    for (const auto &u : in.users) {
        const auto c = class_distribution(u.records);
        dist << fmt::format("{},{},{},{},{}\n", u.user_id, c[0], c[1], c[2], c[3]);
        for (std::size_t k = 0; k < kNumCategories; ++k) total[k] += c[k];
    }
    dist << fmt::format("all,{},{},{},{}\n", total[0], total[1], total[2], total[3]);
    session.write("class_distribution.csv", dist.str());

    const FeatureEngineer engineer(in.feature_config, in.raw_schema);
    std::vector<std::vector<double>> rows;
    for (const auto &u : in.users) {
        for (const auto &r : u.records) rows.push_back(engineer(r).values);
    }
    std::ostringstream corr;
    write_matrix_csv(corr, engineer.schema().names, correlation_matrix(rows));
    session.write("correlation.csv", corr.str());
    session.finish(common_flags(f));
    out << fmt::format("{} users, {} records: Normal {} Mild {} Moderate {} Severe {}\n", in.users.size(), rows.size(),
                       total[0], total[1], total[2], total[3]);
}

void cmd_score(const Flags &f, std::ostream &out) {
    Session session("score", f);
    const Inputs in = load_inputs(session, f, true);
    const FeatureEngineer engineer(in.feature_config, in.raw_schema);
    const BoundLabelMap bound(in.label_map, engineer.schema());

    std::vector<std::vector<std::vector<double>>> per_user;
    std::vector<std::vector<double>> pooled;
    for (const auto &u : in.users) {
        std::vector<std::vector<double>> rows;
        for (const auto &r : u.records) rows.push_back(engineer(r).values);
        pooled.insert(pooled.end(), rows.begin(), rows.end());
        per_user.push_back(std::move(rows));
    }
    const ThresholdTable thresholds = compute_thresholds(pooled, bound);

    std::ostringstream csv;
    csv << "user_id,date,phq4,category";
    for (auto l : kAllLabels) csv << ',' << to_string(l);
    csv << '\n';
    ForestConfig fc;
    fc.mode = ForestMode::Regression;
    for (std::size_t k = 0; k < in.users.size(); ++k) {
        const auto &u = in.users[k];
        const auto model = fit_user_label_model(per_user[k], bound, thresholds, fc,
                                                derive_seed(f.seed, "cli.score", fnv1a64(u.user_id)));
        for (std::size_t i = 0; i < u.records.size(); ++i) {
            const auto &r = u.records[i];
            const auto scores = score_all(per_user[k][i], model.scorer);
            csv << fmt::format("{},{},{},{}", u.user_id, format_date(r.date), *r.phq4, to_string(r.category()));
            for (double s : scores.values) csv << ',' << fmt::format("{}", s);
            csv << '\n';
        }
    }
    session.write("scores.csv", csv.str());

    ordered_json t = ordered_json::object();
    for (const auto &[name, mean] : thresholds.means()) t[name] = mean;
    session.write("thresholds.json", t.dump(2) + "\n");

    const auto scaler = MinMaxScaler::fit(pooled);
    const auto scaled = scaler.transform(pooled);
    const auto km = kmeans_validate(scaled, f.kmeans_k, 10, derive_seed(f.seed, "cli.kmeans"));
    ordered_json kj;
    kj["k"] = f.kmeans_k;
    kj["inertia"] = km.clustering.inertia;
    kj["silhouette"] = km.silhouette;
    kj["passed"] = km.passed();
    std::vector<std::size_t> sizes(f.kmeans_k, 0);
    for (std::size_t a : km.clustering.assignments) ++sizes[a];
    kj["cluster_sizes"] = sizes;
    session.write("kmeans.json", kj.dump(2) + "\n");

    auto effective = common_flags(f);
    effective["kmeans_k"] = f.kmeans_k;
    session.finish(std::move(effective));
    out << fmt::format("scored {} records; k-means silhouette {:.3f}\n", pooled.size(), km.silhouette);
}

PipelineSpec spec_from_flags(const Flags &f) {
    PipelineKind kind;
    try {
        kind = pipeline_kind_from_string(f.spec);
    } catch (const Error &) {
        throw UsageError(fmt::format("--spec must be baseline1, baseline2, baseline3, ihope or custom, got '{}'", f.spec));
    }
    PipelineSpec spec = PipelineSpec::preset(kind, f.seed);
    if (kind == PipelineKind::Custom) {
        spec.features = split_list(f.features);
        if (spec.features.empty()) throw UsageError("--spec custom needs --features a,b,...");
    } else if (!f.features.empty()) {
        throw UsageError("--features is only valid with --spec custom");
    }
    return spec;
}

PipelineResult execute(const Flags &f, const PipelineSpec &spec, const Inputs &in) {
    PipelineOptions options;
    options.feature_config = in.feature_config;
    options.label_map = in.label_map;
    options.jobs = f.jobs;
    return run_pipeline(in.users, in.raw_schema, spec, options);
}

void cmd_run(const Flags &f, std::ostream &out) {
    Session session("run", f);
    const PipelineSpec spec = spec_from_flags(f);
    const Inputs in = load_inputs(session, f, true);
    const PipelineResult result = execute(f, spec, in);

    session.write("report.json", report_to_json_text(result));
    std::ostringstream csv;
    write_report_csv(csv, result);
    session.write("report.csv", csv.str());
    for (const auto &a : result.artifacts) {
        session.write(fs::path("models") / (a.unit_id + ".mlp.json"), mlp_to_json_text(a.mlp));
    }
    if (result.thresholds) {
        ordered_json t = ordered_json::object();
        for (const auto &[name, mean] : result.thresholds->means()) t[name] = mean;
        session.write("thresholds.json", t.dump(2) + "\n");
    }
    auto effective = common_flags(f);
    effective["spec"] = f.spec;
    effective["features"] = f.features;
    session.finish(std::move(effective));
    out << fmt::format("{}: accuracy {:.4f} on {} test records (best fold {}, mean {:.4f})\n", f.spec,
                       result.report.accuracy, result.report.n_test, result.best_fold, result.mean_fold_accuracy());
}

void cmd_export(const Flags &f, std::ostream &out) {
    Session session("export", f);
    const Inputs in = load_inputs(session, f, true);
    const PipelineSpec spec = PipelineSpec::preset(PipelineKind::IHope, f.seed);
    const PipelineResult result = execute(f, spec, in);

    for (auto label : kAllLabels) {
        const auto table = importance_heatmap_of(result, label);
        std::ostringstream csv;
        table.write_csv(csv);
        const std::string stem = fmt::format("heatmap_{}", to_string(label));
        session.write(stem + ".csv", csv.str());
        session.write(stem + ".json", table.to_json_text());
    }
    const auto labels = label_importance_of(result);
    std::ostringstream csv;
    labels.write_csv(csv);
    session.write("label_importance.csv", csv.str());
    session.write("label_importance.json", labels.to_json_text());

    const FeatureEngineer engineer(in.feature_config, in.raw_schema);
    std::vector<std::vector<double>> rows;
    for (const auto &u : in.users) {
        for (const auto &r : u.records) rows.push_back(engineer(r).values);
    }
    const auto hist = export_thresholds(*result.thresholds, rows, engineer.schema().names, f.bins);
    std::ostringstream hcsv;
    write_histograms_csv(hcsv, hist);
    session.write("thresholds.csv", hcsv.str());

    auto effective = common_flags(f);
    effective["bins"] = f.bins;
    session.finish(std::move(effective));
    out << fmt::format("exported figure data for {} users to {}\n", result.artifacts.size(), f.out);
}

std::string config_value(const nlohmann::json &v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_array()) {
        std::string joined;
        for (const auto &item : v) {
            if (!joined.empty()) joined += ',';
            joined += config_value(item);
        }
        return joined;
    }
    return v.dump();
}

// Values from the JSON config apply only to options absent from the command line.
void apply_config(CLI::App &sub, const std::string &path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::ParseError, fmt::format("{}: {}", path, e.what()));
    }
    if (!j.is_object()) throw Error(ErrorCode::ParseError, fmt::format("{}: config must be a JSON object", path));
    for (const auto &[key, value] : j.items()) {
        std::string name = key;
        for (char &c : name) {
            if (c == '_') c = '-';
        }
        if (name == "config") continue;
        CLI::Option *opt = nullptr;
        try {
            opt = sub.get_option("--" + name);
        } catch (const CLI::OptionNotFound &) {
            throw UsageError(fmt::format("{}: unknown key '{}' for {}", path, key, sub.get_name()));
        }
        if (opt->count() > 0) continue;
        opt->add_result(config_value(value));
        opt->run_callback();
    }
}

void write_error(std::ostream &err, std::string_view kind, std::string_view code, std::string_view message) {
    ordered_json j;
    j["error"] = {{"type", kind}, {"code", code}, {"message", message}};
    err << j.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    Flags f;
    CLI::App app{"Interpretable hierarchical PHQ-4 prediction from passive sensing"};
    app.name("ihope");
    app.require_subcommand(1);

    auto add_common = [&](CLI::App *s) {
        s->add_option("--config", f.config, "JSON file of flag values; command-line flags win")->check(CLI::ExistingFile);
        s->add_option("--seed", f.seed, "Master seed");
        s->add_option("--out", f.out, "Output directory");
    };
    auto add_data = [&](CLI::App *s) {
        s->add_option("--data", f.data, "Daily records CSV");
        s->add_option("--schema", f.schema, "Raw schema JSON (default: built in)");
        s->add_option("--feature-config", f.feature_config, "Feature engineering JSON (default: built in)");
        s->add_option("--fill", f.fill, "Missing-value policy: zero or mean");
        s->add_option("--window", f.window, "Label alignment window in days")->check(CLI::NonNegativeNumber);
        s->add_option("--min-points", f.min_points, "Minimum labeled records per user");
        s->add_option("--jobs", f.jobs, "Worker threads (0 = all cores)");
    };

    auto *synth = app.add_subcommand("synth", "Generate a synthetic population");
    add_common(synth);
    synth->add_option("--users", f.users, "Number of users");
    synth->add_option("--records", f.records, "Records per user");
    synth->add_option("--signal", f.signal, "Signal strength in [0,1]");
    synth->add_option("--heterogeneity", f.heterogeneity, "Per-user variation in [0,1]");
    synth->add_option("--label-noise", f.label_noise, "Label noise in [0,1]");
    synth->add_option("--missing-rate", f.missing_rate, "Missing cell rate in [0,1]");
    synth->add_option("--label-every", f.label_every, "Days between PHQ-4 labels");

    auto *stats = app.add_subcommand("stats", "Class distribution and feature correlations");
    add_common(stats);
    add_data(stats);

    auto *score = app.add_subcommand("score", "Interaction-label scores per record");
    add_common(score);
    add_data(score);
    score->add_option("--labelmap", f.labelmap, "Label map JSON (default: built in)");
    score->add_option("--kmeans-k", f.kmeans_k, "Clusters for the k-means check");

    auto *run = app.add_subcommand("run", "Train and evaluate one pipeline");
    add_common(run);
    add_data(run);
    run->add_option("--labelmap", f.labelmap, "Label map JSON (default: built in)");
    run->add_option("--spec", f.spec, "baseline1 | baseline2 | baseline3 | ihope | custom");
    run->add_option("--features", f.features, "Comma-separated features for --spec custom");

    auto *exp = app.add_subcommand("export", "Figure data from an ihope pipeline run");
    add_common(exp);
    add_data(exp);
    exp->add_option("--labelmap", f.labelmap, "Label map JSON (default: built in)");
    exp->add_option("--bins", f.bins, "Histogram bins")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        out << (e.get_exit_code() == 0 ? app.help() : std::string());
        return 0;
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError &e) {
        write_error(err, "UsageError", "UsageError", e.what());
        return 2;
    }

    CLI::App *active = app.get_subcommands().front();
    try {
        if (!f.config.empty()) apply_config(*active, f.config);
        const std::string name = active->get_name();
        if (name == "synth") cmd_synth(f, out);
        if (name == "stats") cmd_stats(f, out);
        if (name == "score") cmd_score(f, out);
        if (name == "run") cmd_run(f, out);
        if (name == "export") cmd_export(f, out);
    } catch (const UsageError &e) {
        write_error(err, "UsageError", "UsageError", e.what());
        return 2;
    } catch (const CLI::ParseError &e) {
        write_error(err, "UsageError", "UsageError", e.what());
        return 2;
    } catch (const Error &e) {
        write_error(err, "RuntimeError", to_string(e.code()), e.what());
        return 1;
    } catch (const std::exception &e) {
        write_error(err, "RuntimeError", "Internal", e.what());
        return 1;
    }
    return 0;
}

}  // namespace ihope::cli
