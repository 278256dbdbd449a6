// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ihs/analysis.hpp"
#include "ihs/dataset.hpp"
#include "ihs/embedding_store.hpp"
#include "ihs/error.hpp"
#include "ihs/io.hpp"
#include "ihs/metrics.hpp"
#include "ihs/model.hpp"
#include "ihs/optim.hpp"
#include "ihs/trainer.hpp"

namespace ihs::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using Ptr = json::json_pointer;

namespace {

// Flags write into the JSON config at a fixed pointer, but only when given,
// so a --config file supplies everything not on the command line.
class Bindings {
public:
    explicit Bindings(CLI::App* app) : app_(app) {
        app_->add_option("--config", config_path_, "JSON run configuration");
    }

    template <class T>
    Bindings& value(const std::string& flag, const std::string& pointer, const std::string& help) {
        auto v = std::make_shared<T>();
        CLI::Option* o = app_->add_option(flag, *v, help);
        if constexpr (!std::is_same_v<T, std::string> && CLI::detail::is_mutable_container<T>::value) {
            o->delimiter(',');
        }
        apply_.push_back([o, v, pointer](json& cfg) {
            if (o->count() > 0) cfg[Ptr(pointer)] = *v;
        });
        return *this;
    }

    Bindings& flag(const std::string& flag, const std::string& pointer, const std::string& help) {
        auto v = std::make_shared<bool>(false);
        CLI::Option* o = app_->add_flag(flag, *v, help);
        apply_.push_back([o, v, pointer](json& cfg) {
            if (o->count() > 0) cfg[Ptr(pointer)] = *v;
        });
        return *this;
    }

    json resolve() const {
        json cfg = json::object();
        if (!config_path_.empty()) {
            try {
                cfg = json::parse(read_file(config_path_));
            } catch (const json::exception& e) {
                fail(ErrorKind::Config, config_path_ + ": " + e.what());
            }
            if (!cfg.is_object()) fail(ErrorKind::Config, config_path_ + ": top level must be an object");
        }
        for (const auto& a : apply_) a(cfg);
        return cfg;
    }

private:
    CLI::App* app_;
    std::string config_path_;
    std::vector<std::function<void(json&)>> apply_;
};

bool has(const json& cfg, const std::string& pointer) { return cfg.contains(Ptr(pointer)); }

template <class T>
T get(const json& cfg, const std::string& pointer, const std::string& flag) {
    if (!has(cfg, pointer)) fail(ErrorKind::Config, "missing " + flag);
    try {
        return cfg.at(Ptr(pointer)).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, flag + ": " + e.what());
    }
}

template <class T>
T get_or(json& cfg, const std::string& pointer, T fallback) {
    if (!has(cfg, pointer)) cfg[Ptr(pointer)] = fallback;
    try {
        return cfg.at(Ptr(pointer)).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, pointer + ": " + e.what());
    }
}

std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path output_dir(json& cfg) {
    if (!has(cfg, "/output_dir")) {
        const char* env = std::getenv("IHS_OUTPUT_DIR");
        cfg["output_dir"] = env && *env ? env : ".";
    }
    return cfg.at("output_dir").get<std::string>();
}

fs::path output_path(json& cfg, const std::string& default_name) {
    if (has(cfg, "/output")) return cfg.at("output").get<std::string>();
    const fs::path p = output_dir(cfg) / default_name;
    cfg["output"] = p.string();
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, text);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path beside(const fs::path& output, const std::string& suffix) {
    fs::path p = output;
    p += suffix;
    return p;
}

// Stores named by the config, kept alive for the FeatureStores view.
struct LoadedStores {
    std::optional<EmbeddingStore> tweet;
    std::optional<EmbeddingStore> context;
    std::optional<EmbeddingStore> emotion;
    json digests = json::array();

    FeatureStores view() const {
        return {tweet ? &*tweet : nullptr, context ? &*context : nullptr, emotion ? &*emotion : nullptr};
    }
};

LoadedStores load_stores(const json& cfg) {
    LoadedStores out;
    const auto load = [&](const char* role, std::optional<EmbeddingStore>& slot) {
        const std::string pointer = std::string("/stores/") + role;
        if (!has(cfg, pointer)) return;
        const auto path = cfg.at(Ptr(pointer)).get<std::string>();
        slot = read_cache(path);
        out.digests.push_back({{"role", role},
                               {"model_id", slot->model_id()},
                               {"pooling", to_string(slot->pooling())},
                               {"instruction_sha256", to_hex(slot->instruction_digest())},
                               {"file_sha256", sha256_file_hex(path)}});
    };
    if (!has(cfg, "/stores/tweet")) fail(ErrorKind::Config, "missing --tweet-store");
    load("tweet", out.tweet);
    load("context", out.context);
    load("emotion", out.emotion);
    return out;
}

ModelSpec resolve_spec(json& cfg, const LoadedStores& stores) {
    json m = cfg.value("model", json::object());
    if (!m.contains("kind")) m["kind"] = "embed_head";
    m["d_tweet"] = stores.tweet->dimension();
    if (stores.context) m["d_context"] = stores.context->dimension();
    const auto spec = spec_from_json(m);
    if (spec.uses_context() && !stores.context) fail(ErrorKind::Config, "model needs --context-store");
    if (spec.uses_emotion() && !stores.emotion) fail(ErrorKind::Config, "model needs --emotion-store");
    cfg["model"] = m;
    return spec;
}

TrainHyper resolve_hyper(json& cfg) {
    const auto profile = parse_profile(get_or<std::string>(cfg, "/profile", "finetune-head"));
    auto hyper = hyper_from_json(cfg.value("hyper", json::object()), profile_hyper(profile));
    cfg["hyper"] = to_json(hyper);
    return hyper;
}

json input_digests(const json& cfg, const LoadedStores& stores) {
    json j = {{"stores", stores.digests}};
    if (has(cfg, "/samples")) j["samples_sha256"] = sha256_file_hex(cfg.at("samples").get<std::string>());
    if (has(cfg, "/splits")) j["splits_sha256"] = sha256_file_hex(cfg.at("splits").get<std::string>());
    return j;
}

// Shared flag groups.
void store_flags(Bindings& b) {
    b.value<std::string>("--tweet-store", "/stores/tweet", "EMBC cache of tweet embeddings")
        .value<std::string>("--context-store", "/stores/context", "EMBC cache of context embeddings")
        .value<std::string>("--emotion-store", "/stores/emotion", "EMBC cache of emotion distributions");
}

void output_flags(Bindings& b) {
    b.value<std::string>("--output,-o", "/output", "output path")
        .value<std::string>("--output-dir", "/output_dir", "directory for default outputs (env IHS_OUTPUT_DIR)");
}

void training_flags(Bindings& b) {
    b.value<std::string>("--samples", "/samples", "canonical sample JSONL")
        .value<std::string>("--splits", "/splits", "split file")
        .value<std::string>("--model", "/model/kind", "embed_head|concat_fusion|adaptive_fusion|moe_fusion|shared_query_fusion")
        .value<std::size_t>("--heads", "/model/attention_heads", "attention heads (shared_query_fusion)")
        .value<std::string>("--profile", "/profile", "finetune-head|linear-probe")
        .value<double>("--lr", "/hyper/learning_rate", "learning rate")
        .value<std::size_t>("--epochs", "/hyper/epochs", "epochs")
        .value<std::size_t>("--batch-size", "/hyper/batch_size", "batch size")
        .value<double>("--weight-decay", "/hyper/weight_decay", "decoupled weight decay")
        .value<double>("--warmup", "/hyper/warmup_fraction", "warmup fraction of total steps")
        .value<double>("--dropout", "/hyper/dropout", "dropout");
    store_flags(b);
    output_flags(b);
}

struct RunInputs {
    SampleSet samples;
    SplitAssignment splits;
    LoadedStores stores;
};

RunInputs load_run_inputs(json& cfg) {
    auto samples = read_samples(get<std::string>(cfg, "/samples", "--samples"));
    auto splits = read_splits(get<std::string>(cfg, "/splits", "--splits"));
    return {std::move(samples), std::move(splits), load_stores(cfg)};
}

// ---- subcommands ----

int run_ingest(json cfg, std::ostream& out, std::ostream& err) {
    const auto kind = parse_dataset(get<std::string>(cfg, "/dataset/kind", "--dataset"));
    const auto input = get<std::string>(cfg, "/dataset/input", "--input");

    ColumnMap cols = default_columns(kind);
    if (has(cfg, "/dataset/columns")) {
        const auto& c = cfg.at("/dataset/columns"_json_pointer);
        cols.text = c.value("text", cols.text);
        cols.label = c.value("label", cols.label);
        cols.id = c.value("id", cols.id);
        cols.score = c.value("score", cols.score);
        cols.model_score = c.value("model_score", cols.model_score);
        cols.group = c.value("group", cols.group);
        cols.split = c.value("split", cols.split);
        const auto d = c.value("delimiter", std::string());
        if (d.size() > 1) fail(ErrorKind::Config, "delimiter must be a single character");
        if (!d.empty()) cols.delimiter = d[0];
    }
    const auto set = ingest(kind, input, cols);
    if (auto note = count_discrepancy(set)) err << "note: " << *note << '\n';

    SplitAssignment splits;
    const bool use_source = set.has_source_split() && !has(cfg, "/split/ratios");
    if (use_source) {
        splits = source_splits(set);
    } else {
        SplitRatios ratios = default_ratios(kind);
        if (has(cfg, "/split/ratios")) {
            const auto r = cfg.at("/split/ratios"_json_pointer).get<std::vector<double>>();
            if (r.size() != 3) fail(ErrorKind::Config, "--ratios needs three values");
            const double scale = r[0] + r[1] + r[2] > 1.5 ? 100.0 : 1.0;  // percentages accepted
            ratios = {r[0] / scale, r[1] / scale, r[2] / scale};
        }
        const auto seed = get_or<std::uint64_t>(cfg, "/split/seed", 0);
        const bool stratify = get_or<bool>(cfg, "/split/stratify", false);
        splits = make_splits(set, ratios, seed, stratify);
    }
    cfg["/split/from_source"_json_pointer] = use_source;

    const auto samples_path = output_path(cfg, std::string(to_string(kind)) + ".samples.jsonl");
    fs::path splits_path;
    if (has(cfg, "/splits_output")) {
        splits_path = cfg.at("splits_output").get<std::string>();
    } else {
        splits_path = samples_path;
        splits_path.replace_extension(".splits.json");
        cfg["splits_output"] = splits_path.string();
    }
    if (samples_path.has_parent_path()) fs::create_directories(samples_path.parent_path());
    if (splits_path.has_parent_path()) fs::create_directories(splits_path.parent_path());
    write_samples(samples_path, set, &splits);
    write_splits(splits_path, splits);
    write_json(beside(samples_path, ".config.json"), cfg);

    out << "ingested " << set.size() << " samples (hate " << set.counts().hate << ", not hate "
        << set.counts().not_hate << "); splits " << splits.train.size() << "/" << splits.validation.size() << "/"
        << splits.test.size() << (use_source ? " from source" : "") << '\n';
    return kExitOk;
}

int run_train(json cfg, std::ostream& out, std::ostream&) {
    auto in = load_run_inputs(cfg);
    const auto spec = resolve_spec(cfg, in.stores);
    const auto hyper = resolve_hyper(cfg);
    const auto seed = get_or<std::uint64_t>(cfg, "/seed", 0);
    const auto dir = output_path(cfg, "checkpoint");

    const auto run = train(spec, in.samples, in.splits, in.stores.view(), hyper, seed);
    json extra = {{"config", cfg}, {"inputs", input_digests(cfg, in.stores)}, {"created_at", now_utc()}};
    if (!in.splits.test.empty()) extra["test"] = to_json(evaluate(run, in.samples, in.splits.test, in.stores.view()));
    save_checkpoint(dir, run, extra);

    for (const auto& h : run.history) {
        out << "epoch " << h.epoch << "  loss " << h.train_loss << "  val f1_weighted " << h.validation.f1_weighted
            << '\n';
    }
    out << "best epoch " << run.best_epoch << " -> " << dir.string() << '\n';
    return kExitOk;
}

json report_envelope(const json& cfg, const json& inputs) {
    return {{"config", cfg}, {"inputs", inputs}, {"created_at", now_utc()}};
}

int run_eval(json cfg, std::ostream& out, std::ostream&) {
    const auto run = load_checkpoint(get<std::string>(cfg, "/checkpoint", "--checkpoint"));
    auto in = load_run_inputs(cfg);
    check_compatible(run, in.stores.view());
    const auto split = parse_split(get_or<std::string>(cfg, "/split", "test"));
    const auto metrics = evaluate(run, in.samples, in.splits.ids(split), in.stores.view());
    const auto path = output_path(cfg, "eval.json");

    json j = report_envelope(cfg, input_digests(cfg, in.stores));
    j["split"] = to_string(split);
    j["metrics"] = to_json(metrics);
    write_json(path, j);
    out << to_string(split) << ": accuracy " << metrics.accuracy << "  f1_weighted " << metrics.f1_weighted
        << "  f1_macro " << metrics.f1_macro << '\n';
    return kExitOk;
}

int run_cross_eval(json cfg, std::ostream& out, std::ostream&) {
    const auto run = load_checkpoint(get<std::string>(cfg, "/checkpoint", "--checkpoint"));
    const auto samples = read_samples(get<std::string>(cfg, "/samples", "--samples"));
    const auto stores = load_stores(cfg);
    const auto which = get_or<std::string>(cfg, "/foreign_split", "all");

    Metrics metrics;
    if (which == "all") {
        metrics = cross_evaluate(run, samples, stores.view());
    } else if (which == "test") {
        const auto splits = read_splits(get<std::string>(cfg, "/splits", "--splits"));
        metrics = cross_evaluate(run, samples, stores.view(), &splits.test);
    } else {
        fail(ErrorKind::Config, "--foreign-split must be all or test");
    }
    const auto path = output_path(cfg, "cross_eval.json");
    json j = report_envelope(cfg, input_digests(cfg, stores));
    j["foreign_dataset"] = to_string(samples.source());
    j["foreign_split"] = which;
    j["metrics"] = to_json(metrics);
    write_json(path, j);
    out << to_string(samples.source()) << " (" << which << "): accuracy " << metrics.accuracy << "  f1_macro "
        << metrics.f1_macro << '\n';
    return kExitOk;
}

int run_multi_seed_cmd(json cfg, std::ostream& out, std::ostream&) {
    auto in = load_run_inputs(cfg);
    const auto spec = resolve_spec(cfg, in.stores);
    const auto hyper = resolve_hyper(cfg);
    std::vector<std::uint64_t> seeds(kDefaultSeeds.begin(), kDefaultSeeds.end());
    seeds = get_or<std::vector<std::uint64_t>>(cfg, "/seeds", seeds);
    const auto jobs = get_or<std::size_t>(cfg, "/jobs", 1);
    const auto path = output_path(cfg, "report.json");

    auto report = run_multi_seed(spec, in.samples, in.splits, in.stores.view(), hyper, seeds, jobs);
    report.config["run"] = cfg;
    report.provenance["inputs"] = input_digests(cfg, in.stores);
    report.provenance["created_at"] = now_utc();
    write_json(path, to_json(report));

    const std::vector<std::pair<std::string, RunReport>> rows = {{std::string(to_string(spec.kind)), report}};
    out << format_table(rows);
    return kExitOk;
}

int run_report(json cfg, std::ostream& out, std::ostream&) {
    const auto inputs = get<std::vector<std::string>>(cfg, "/inputs", "--input");
    const auto names = cfg.value("names", std::vector<std::string>{});
    if (!names.empty() && names.size() != inputs.size()) fail(ErrorKind::Config, "one --name per --input");
    std::vector<std::pair<std::string, RunReport>> rows;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        json j;
        try {
            j = json::parse(read_file(inputs[i]));
        } catch (const json::exception& e) {
            fail(ErrorKind::Format, inputs[i] + ": " + e.what());
        }
        rows.emplace_back(names.empty() ? fs::path(inputs[i]).stem().string() : names[i], report_from_json(j));
    }
    const auto table = format_table(rows);
    if (has(cfg, "/output")) write_text(cfg.at("output").get<std::string>(), table);
    out << table;
    return kExitOk;
}

int run_analyze_errors(json cfg, std::ostream& out, std::ostream&) {
    const auto run = load_checkpoint(get<std::string>(cfg, "/checkpoint", "--checkpoint"));
    auto in = load_run_inputs(cfg);
    check_compatible(run, in.stores.view());
    const auto split = parse_split(get_or<std::string>(cfg, "/split", "test"));
    const auto k = get_or<std::size_t>(cfg, "/k", 20);
    const auto which = get_or<std::string>(cfg, "/direction", "both");
    std::vector<Direction> directions;
    if (which == "both") {
        directions = {Direction::HateAsNotHate, Direction::NotHateAsHate};
    } else {
        directions = {parse_direction(which)};
    }
    const auto path = output_path(cfg, "errors.json");

    json j = report_envelope(cfg, input_digests(cfg, in.stores));
    j["split"] = to_string(split);
    j["results"] = json::array();
    std::string text;
    for (const auto d : directions) {
        const auto errors = confident_errors(run, in.samples, in.splits.ids(split), in.stores.view(), d, k);
        j["results"].push_back(to_json(errors, d));
        text += format_errors(errors, d);
    }
    write_json(path, j);
    out << text;
    return kExitOk;
}

int run_probe_bias(json cfg, std::ostream& out, std::ostream&) {
    const auto tmpl = get_or<std::string>(cfg, "/template", std::string(kDefaultProbeTemplate));
    const auto targets = get_or<std::vector<std::string>>(cfg, "/targets", default_probe_targets());

    if (has(cfg, "/export")) {
        const fs::path path = cfg.at("export").get<std::string>();
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        const auto probes = probe_samples(tmpl, targets);
        write_samples(path, probes);
        out << "exported " << probes.size() << " probe statements to " << path.string() << '\n';
        return kExitOk;
    }

    const auto run = load_checkpoint(get<std::string>(cfg, "/checkpoint", "--checkpoint"));
    const auto stores = load_stores(cfg);
    const auto result = bias_probe(run, tmpl, targets, stores.view());
    const auto path = output_path(cfg, "probe.json");
    json j = report_envelope(cfg, input_digests(cfg, stores));
    j["probe"] = to_json(result);
    j["instruction_sha256"] = run.provenance.front().instruction_sha256;
    j["note"] = "probe texts are embedded with the same instruction template as the training run";
    write_json(path, j);
    out << format_probe(result);
    return kExitOk;
}

std::string one_line(std::string s) {
    for (auto& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Implicit hate speech classifiers over cached embeddings", "ihs"};
    app.require_subcommand(1);

    using Runner = std::function<int(json, std::ostream&, std::ostream&)>;
    std::vector<std::tuple<CLI::App*, std::unique_ptr<Bindings>, Runner>> commands;
    const auto add = [&](const std::string& name, const std::string& help, Runner runner) -> Bindings& {
        auto* sub = app.add_subcommand(name, help);
        commands.emplace_back(sub, std::make_unique<Bindings>(sub), std::move(runner));
        return *std::get<1>(commands.back());
    };

    add("ingest", "parse a dataset file into canonical samples and a split file", run_ingest)
        .value<std::string>("--dataset", "/dataset/kind", "ihc|sbic|dynahate|toxigen")
        .value<std::string>("--input", "/dataset/input", "source CSV/TSV")
        .value<std::vector<double>>("--ratios", "/split/ratios", "train,validation,test (fractions or percentages)")
        .value<std::uint64_t>("--seed", "/split/seed", "split seed")
        .flag("--stratify", "/split/stratify", "keep label proportions in every split")
        .value<std::string>("--splits-output", "/splits_output", "split file path")
        .value<std::string>("--output,-o", "/output", "sample JSONL path")
        .value<std::string>("--output-dir", "/output_dir", "directory for default outputs (env IHS_OUTPUT_DIR)");

    auto& train_b = add("train", "train one model and save its best checkpoint", run_train);
    training_flags(train_b);
    train_b.value<std::uint64_t>("--seed", "/seed", "run seed");

    auto& eval_b = add("eval", "evaluate a checkpoint on one split", run_eval);
    eval_b.value<std::string>("--checkpoint", "/checkpoint", "checkpoint directory")
        .value<std::string>("--samples", "/samples", "canonical sample JSONL")
        .value<std::string>("--splits", "/splits", "split file")
        .value<std::string>("--split", "/split", "train|validation|test");
    store_flags(eval_b);
    output_flags(eval_b);

    auto& cross_b = add("cross-eval", "evaluate a checkpoint on a foreign dataset", run_cross_eval);
    cross_b.value<std::string>("--checkpoint", "/checkpoint", "checkpoint directory")
        .value<std::string>("--samples", "/samples", "foreign sample JSONL")
        .value<std::string>("--splits", "/splits", "foreign split file (with --foreign-split test)")
        .value<std::string>("--foreign-split", "/foreign_split", "all|test");
    store_flags(cross_b);
    output_flags(cross_b);

    auto& multi_b = add("multi-seed", "train and test once per seed and aggregate", run_multi_seed_cmd);
    training_flags(multi_b);
    multi_b.value<std::vector<std::uint64_t>>("--seeds", "/seeds", "comma-separated seeds")
        .value<std::size_t>("--jobs,-j", "/jobs", "seeds trained in parallel");

    add("report", "format run reports as a table", run_report)
        .value<std::vector<std::string>>("--input", "/inputs", "run report JSON (repeatable)")
        .value<std::vector<std::string>>("--name", "/names", "row name per input")
        .value<std::string>("--output,-o", "/output", "text output path");

    auto& err_b = add("analyze-errors", "list the most confident misclassifications", run_analyze_errors);
    err_b.value<std::string>("--checkpoint", "/checkpoint", "checkpoint directory")
        .value<std::string>("--samples", "/samples", "canonical sample JSONL")
        .value<std::string>("--splits", "/splits", "split file")
        .value<std::string>("--split", "/split", "train|validation|test")
        .value<std::string>("--direction", "/direction", "both|hate-as-not-hate|not-hate-as-hate")
        .value<std::size_t>("--k", "/k", "records per direction");
    store_flags(err_b);
    output_flags(err_b);

    auto& probe_b = add("probe-bias", "hate probability of templated target statements", run_probe_bias);
    probe_b.value<std::string>("--checkpoint", "/checkpoint", "checkpoint directory")
        .value<std::string>("--template", "/template", "statement with a {target} slot")
        .value<std::vector<std::string>>("--targets", "/targets", "comma-separated targets")
        .value<std::string>("--export", "/export", "write probe statements as sample JSONL and stop");
    store_flags(probe_b);
    output_flags(probe_b);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kExitOk;
        }
        err << "error: usage: " << one_line(e.what()) << '\n';
        return kExitUsage;
    }

    try {
        for (auto& [sub, bindings, runner] : commands) {
            if (sub->parsed()) return runner(bindings->resolve(), out, err);
        }
        err << "error: usage: no subcommand\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << to_string(e.kind()) << ": " << one_line(e.what()) << '\n';
    } catch (const json::exception& e) {
        err << "error: config: " << one_line(e.what()) << '\n';
    } catch (const std::exception& e) {
        err << "error: io: " << one_line(e.what()) << '\n';
    }
    return kExitFailure;
}

int dispatch(int argc, const char* const* argv) { return dispatch(argc, argv, std::cout, std::cerr); }

}  // namespace ihs::cli
