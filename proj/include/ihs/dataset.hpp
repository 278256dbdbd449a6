// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ihs {

/// Hate is the positive class everywhere.
enum class Label : std::uint8_t { NotHate = 0, Hate = 1 };

enum class Dataset { IHC, SBIC, DynaHate, ToxiGen };

std::string_view to_string(Dataset dataset);
/// Accepts the canonical names case-insensitively ("ihc", "sbic", "dynahate", "toxigen").
Dataset parse_dataset(std::string_view name);

enum class Split { Train, Validation, Test };

std::string_view to_string(Split split);
/// Accepts train, validation/val/dev and test.
Split parse_split(std::string_view name);

struct Sample {
    std::string id;
    std::string text;
    Label label = Label::NotHate;
    Dataset dataset = Dataset::IHC;
    std::optional<Split> split;  // present only when the source carries one

    bool operator==(const Sample&) const = default;
};

struct LabelCounts {
    std::size_t not_hate = 0;
    std::size_t hate = 0;

    std::size_t total() const { return not_hate + hate; }
    bool operator==(const LabelCounts&) const = default;
};

class SampleSet {
public:
    SampleSet() = default;
    /// Validates id uniqueness and nonempty text, then tallies labels.
    SampleSet(Dataset source, std::vector<Sample> samples);

    Dataset source() const { return source_; }
    const std::vector<Sample>& samples() const { return samples_; }
    const LabelCounts& counts() const { return counts_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }

    /// True when every sample carries a split from the source file.
    bool has_source_split() const;

    bool operator==(const SampleSet&) const = default;

private:
    Dataset source_ = Dataset::IHC;
    std::vector<Sample> samples_;
    LabelCounts counts_;
};

struct SplitRatios {
    double train = 0.6;
    double validation = 0.2;
    double test = 0.2;
};

/// Per-dataset ratios used by the training protocol.
SplitRatios default_ratios(Dataset dataset);

struct SplitAssignment {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    SplitRatios ratios;
    std::uint64_t seed = 0;
    bool from_source = false;  // taken verbatim from the dataset's own split column

    const std::vector<std::string>& ids(Split split) const;
};

/// Returns Hate iff the mean offensiveness is at least 0.5.
Label label_sbic(std::span<const double> offensiveness_scores);
/// Returns Hate iff human + model toxicity strictly exceeds 5.5.
Label label_toxigen(double human_toxicity, double model_toxicity);

/// Column names of the source file. Empty strings mean "not present".
struct ColumnMap {
    std::string text;
    std::string label;        // IHC class / DynaHate label
    std::string id;           // optional; ids are synthesized from row order otherwise
    std::string score;        // SBIC offensiveness / ToxiGen human toxicity
    std::string model_score;  // ToxiGen model toxicity
    std::string group;        // SBIC: rows sharing this column are one post
    std::string split;        // optional author split
    char delimiter = '\0';    // '\0' picks tab for .tsv and comma otherwise
};

ColumnMap default_columns(Dataset dataset);

SampleSet ingest(Dataset kind, const std::filesystem::path& source_path,
                 const ColumnMap& columns);
SampleSet ingest(Dataset kind, const std::filesystem::path& source_path);
/// Parses already loaded file contents; `delimiter` must be set.
SampleSet ingest_text(Dataset kind, std::string_view contents, const ColumnMap& columns);

/// Reference label tallies for the official releases.
LabelCounts reference_counts(Dataset dataset);
/// A human-readable note when the ingested counts differ from the reference
/// tallies; nullopt when they agree.
std::optional<std::string> count_discrepancy(const SampleSet& set);

/// Seeded shuffle then contiguous partition: floor for train and validation,
/// the remainder goes to test. With `stratify` the shuffled order interleaves
/// the two classes proportionally before partitioning.
SplitAssignment make_splits(const SampleSet& samples, const SplitRatios& ratios,
                            std::uint64_t seed, bool stratify = false);

/// Uses the split carried by the samples themselves.
SplitAssignment source_splits(const SampleSet& samples);

// Canonical JSONL: {"id","text","label","dataset","split"?}, one per line.
std::string to_jsonl(const SampleSet& set, const SplitAssignment* splits = nullptr);
SampleSet samples_from_jsonl(std::string_view contents);
void write_samples(const std::filesystem::path& path, const SampleSet& set,
                   const SplitAssignment* splits = nullptr);
SampleSet read_samples(const std::filesystem::path& path);

std::string to_json(const SplitAssignment& splits);
SplitAssignment splits_from_json(std::string_view contents);
void write_splits(const std::filesystem::path& path, const SplitAssignment& splits);
SplitAssignment read_splits(const std::filesystem::path& path);

}  // namespace ihs
