// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "ihs/io.hpp"
#include "ihs/trainer.hpp"
#include "support.hpp"

namespace support = ihs::testing;

namespace fs = std::filesystem;
using namespace ihs;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"ihs"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

// Samples, splits and a tweet store on disk.
struct Workspace {
    fs::path dir;
    fs::path samples, splits, store;

    explicit Workspace(const std::string& name) : dir(support::scratch_dir(name)) {
        const auto d = support::two_gaussians(5, 8, 3.0, 80, 20, 20);
        samples = dir / "samples.jsonl";
        splits = dir / "splits.json";
        store = dir / "tweet.embc";
        write_samples(samples, d.samples);
        write_splits(splits, d.splits);
        write_cache(d.store, store);
    }

    std::vector<std::string> train_args(const fs::path& out) const {
        return {"train",     "--samples", samples.string(), "--splits", splits.string(), "--tweet-store",
                store.string(), "--epochs", "2",            "--lr",     "1e-3",          "-o",
                out.string()};
    }
};

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    auto r = run({});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_EQ(r.err.rfind("error: usage: ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
    EXPECT_EQ(run({"bogus"}).code, cli::kExitUsage);
    EXPECT_EQ(run({"train", "--epochs", "many"}).code, cli::kExitUsage);
}

TEST(Cli, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, cli::kExitOk);
    EXPECT_NE(r.out.find("multi-seed"), std::string::npos);
}

TEST(Cli, IngestWritesSamplesSplitsAndConfig) {
    const auto dir = support::scratch_dir("cli-ingest");
    const auto out = dir / "ihc.jsonl";
    const auto r = run({"ingest", "--dataset", "ihc", "--input", support::fixture("ihc_three_rows.tsv").string(),
                        "--ratios", "50,25,25", "-o", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_samples(out).size(), 2u);
    const auto splits = read_splits(dir / "ihc.splits.json");
    EXPECT_EQ(splits.train.size(), 1u);
    EXPECT_DOUBLE_EQ(splits.ratios.train, 0.5);
    const auto cfg = nlohmann::json::parse(read_file(dir / "ihc.jsonl.config.json"));
    EXPECT_EQ(cfg.at("dataset").at("kind"), "ihc");
    EXPECT_NE(r.err.find("note: "), std::string::npos);
}

TEST(Cli, IngestKeepsSourceSplit) {
    const auto dir = support::scratch_dir("cli-ingest-source");
    const auto r = run({"ingest", "--dataset", "toxigen", "--input",
                        support::fixture("toxigen_boundary.csv").string(), "-o", (dir / "t.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(read_splits(dir / "t.splits.json").from_source);
}

TEST(Cli, IngestErrorIsOneLine) {
    const auto r = run({"ingest", "--dataset", "ihc", "--input", support::fixture("ihc_bad_label.tsv").string(),
                        "-o", (support::scratch_dir("cli-bad") / "x.jsonl").string()});
    EXPECT_EQ(r.code, cli::kExitFailure);
    EXPECT_EQ(r.err.rfind("error: ingest: ", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST(Cli, TrainEvalAndAnalyze) {
    const Workspace ws("cli-train");
    const auto ckpt = ws.dir / "ckpt";
    auto r = run(ws.train_args(ckpt));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto manifest = nlohmann::json::parse(read_file(ckpt / "manifest.json"));
    EXPECT_TRUE(manifest.contains("created_at"));
    EXPECT_EQ(manifest.at("inputs").at("samples_sha256"), sha256_file_hex(ws.samples));
    EXPECT_EQ(manifest.at("config").at("hyper").at("epochs"), 2);
    EXPECT_TRUE(manifest.contains("test"));

    r = run({"eval", "--checkpoint", ckpt.string(), "--samples", ws.samples.string(), "--splits", ws.splits.string(),
             "--tweet-store", ws.store.string(), "--split", "validation", "-o", (ws.dir / "eval.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ev = nlohmann::json::parse(read_file(ws.dir / "eval.json"));
    EXPECT_EQ(ev.at("metrics").at("f1_weighted").get<double>(), manifest.at("val_weighted_f1").get<double>());

    r = run({"analyze-errors", "--checkpoint", ckpt.string(), "--samples", ws.samples.string(), "--splits",
             ws.splits.string(), "--tweet-store", ws.store.string(), "--k", "3", "-o",
             (ws.dir / "errors.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(read_file(ws.dir / "errors.json")).at("results").size(), 2u);

    r = run({"cross-eval", "--checkpoint", ckpt.string(), "--samples", ws.samples.string(), "--tweet-store",
             ws.store.string(), "-o", (ws.dir / "cross.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(read_file(ws.dir / "cross.json")).at("foreign_split"), "all");
}

TEST(Cli, MissingStoreLeavesNoCheckpoint) {
    const Workspace ws("cli-missing-store");
    auto args = ws.train_args(ws.dir / "ckpt");
    args[6] = (ws.dir / "absent.embc").string();
    const auto r = run(args);
    EXPECT_EQ(r.code, cli::kExitFailure);
    EXPECT_EQ(r.err.rfind("error: io: ", 0), 0u) << r.err;
    EXPECT_FALSE(fs::exists(ws.dir / "ckpt"));
}

TEST(Cli, FlagsOverrideConfig) {
    const Workspace ws("cli-config");
    const nlohmann::json cfg = {{"samples", ws.samples.string()},
                                {"splits", ws.splits.string()},
                                {"stores", {{"tweet", ws.store.string()}}},
                                {"hyper", {{"epochs", 3}, {"learning_rate", 1e-3}}},
                                {"seed", 2}};
    write_file_atomic(ws.dir / "cfg.json", cfg.dump());
    const auto r = run({"train", "--config", (ws.dir / "cfg.json").string(), "--epochs", "1", "-o",
                        (ws.dir / "ckpt").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = nlohmann::json::parse(read_file(ws.dir / "ckpt" / "manifest.json"));
    EXPECT_EQ(m.at("hyper").at("epochs"), 1);
    EXPECT_EQ(m.at("hyper").at("learning_rate"), 1e-3);
    EXPECT_EQ(m.at("seed"), 2);
}

TEST(Cli, BadConfigIsConfigError) {
    const auto dir = support::scratch_dir("cli-bad-config");
    write_file_atomic(dir / "cfg.json", "{oops");
    const auto r = run({"train", "--config", (dir / "cfg.json").string()});
    EXPECT_EQ(r.code, cli::kExitFailure);
    EXPECT_EQ(r.err.rfind("error: config: ", 0), 0u) << r.err;
}

TEST(Cli, OutputDirFromEnvironment) {
    const Workspace ws("cli-env");
    auto args = ws.train_args("unused");
    args.resize(args.size() - 2);
    ::setenv("IHS_OUTPUT_DIR", ws.dir.c_str(), 1);
    const auto r = run(args);
    ::unsetenv("IHS_OUTPUT_DIR");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(ws.dir / "checkpoint" / "manifest.json"));
}

TEST(Cli, MultiSeedAndReport) {
    const Workspace ws("cli-multi");
    const auto report = ws.dir / "report.json";
    auto r = run({"multi-seed", "--samples", ws.samples.string(), "--splits", ws.splits.string(), "--tweet-store",
                  ws.store.string(), "--epochs", "1", "--seeds", "0,1", "--jobs", "2", "-o", report.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(read_file(report));
    EXPECT_EQ(j.at("seeds").size(), 2u);
    EXPECT_TRUE(j.at("provenance").contains("inputs"));
    r = run({"report", "--input", report.string(), "--name", "head"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("head"), std::string::npos);
}

TEST(Cli, ProbeExport) {
    const auto dir = support::scratch_dir("cli-probe");
    const auto r = run({"probe-bias", "--targets", "A,B", "--export", (dir / "p.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_samples(dir / "p.jsonl").size(), 2u);
}
