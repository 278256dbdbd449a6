// SPDX-License-Identifier: Apache-2.0
#include "ihs/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "ihs/csv.hpp"
#include "ihs/error.hpp"
#include "ihs/io.hpp"
#include "ihs/random.hpp"

namespace ihs {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n\v\f";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string row_ref(const csv::Record& r) { return "record " + std::to_string(r.number); }

double parse_score(std::string_view field, const csv::Record& row, std::string_view column) {
    const auto t = trim(field);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(value)) {
        fail(ErrorKind::Ingest, row_ref(row) + ": column '" + std::string(column) +
                                    "' is not a finite number: '" + std::string(field) + "'");
    }
    return value;
}

std::size_t require_column(const csv::Table& table, const std::string& name, std::string_view role) {
    if (name.empty()) {
        fail(ErrorKind::Config, "no column configured for " + std::string(role));
    }
    const auto idx = table.column(name);
    if (!idx) fail(ErrorKind::Ingest, "missing column '" + name + "' (" + std::string(role) + ")");
    return *idx;
}

std::optional<std::size_t> optional_column(const csv::Table& table, const std::string& name) {
    if (name.empty()) return std::nullopt;
    return table.column(name);
}

const std::string& field_at(const csv::Record& row, std::size_t idx, std::size_t width) {
    if (row.fields.size() != width) {
        fail(ErrorKind::Ingest, row_ref(row) + ": malformed row with " +
                                    std::to_string(row.fields.size()) + " fields, expected " +
                                    std::to_string(width));
    }
    return row.fields[idx];
}

std::string row_text(const csv::Record& row, std::size_t idx, std::size_t width) {
    const auto& text = field_at(row, idx, width);
    if (trim(text).empty()) fail(ErrorKind::Ingest, row_ref(row) + ": empty text");
    return text;
}

std::string make_id(Dataset kind, const std::optional<std::size_t>& id_col, const csv::Record& row,
                    std::size_t width, std::size_t ordinal) {
    if (id_col) {
        const auto& v = field_at(row, *id_col, width);
        if (trim(v).empty()) fail(ErrorKind::Ingest, row_ref(row) + ": empty id");
        return v;
    }
    return lower(to_string(kind)) + "-" + std::to_string(ordinal);
}

std::vector<Sample> ingest_ihc(const csv::Table& t, const ColumnMap& cols) {
    const auto w = t.header.size();
    const auto text_i = require_column(t, cols.text, "text");
    const auto label_i = require_column(t, cols.label, "label");
    const auto id_i = optional_column(t, cols.id);
    std::vector<Sample> out;
    for (const auto& row : t.rows) {
        const auto token = trim(field_at(row, label_i, w));
        Label label;
        if (token == "implicit_hate") {
            label = Label::Hate;
        } else if (token == "not_hate") {
            label = Label::NotHate;
        } else if (token == "explicit_hate") {
            continue;
        } else {
            fail(ErrorKind::Ingest, row_ref(row) + ": unknown label token '" + std::string(token) + "'");
        }
        out.push_back({make_id(Dataset::IHC, id_i, row, w, row.number - 1), row_text(row, text_i, w),
                       label, Dataset::IHC, std::nullopt});
    }
    return out;
}

std::vector<Sample> ingest_dynahate(const csv::Table& t, const ColumnMap& cols) {
    const auto w = t.header.size();
    const auto text_i = require_column(t, cols.text, "text");
    const auto label_i = require_column(t, cols.label, "label");
    const auto id_i = optional_column(t, cols.id);
    std::vector<Sample> out;
    for (const auto& row : t.rows) {
        const auto token = trim(field_at(row, label_i, w));
        Label label;
        if (token == "hate") {
            label = Label::Hate;
        } else if (token == "nothate") {
            label = Label::NotHate;
        } else {
            fail(ErrorKind::Ingest, row_ref(row) + ": unknown label token '" + std::string(token) + "'");
        }
        out.push_back({make_id(Dataset::DynaHate, id_i, row, w, row.number - 1),
                       row_text(row, text_i, w), label, Dataset::DynaHate, std::nullopt});
    }
    return out;
}

std::vector<Sample> ingest_sbic(const csv::Table& t, const ColumnMap& cols) {
    const auto w = t.header.size();
    const auto text_i = require_column(t, cols.text, "text");
    const auto score_i = require_column(t, cols.score, "offensiveness score");
    const auto group_i = cols.group.empty() ? text_i : require_column(t, cols.group, "post group");
    const auto id_i = optional_column(t, cols.id);

    struct Post {
        std::string id;
        std::string text;
        std::vector<double> scores;
    };
    std::vector<Post> posts;
    std::unordered_map<std::string, std::size_t> by_group;
    for (const auto& row : t.rows) {
        const auto& key = field_at(row, group_i, w);
        const double score = parse_score(field_at(row, score_i, w), row, cols.score);
        if (score < 0.0 || score > 1.0) {
            fail(ErrorKind::Ingest, row_ref(row) + ": offensiveness score outside [0,1]");
        }
        auto [it, inserted] = by_group.try_emplace(key, posts.size());
        if (inserted) {
            posts.push_back({make_id(Dataset::SBIC, id_i, row, w, posts.size() + 1),
                             row_text(row, text_i, w), {}});
        }
        posts[it->second].scores.push_back(score);
    }
    std::vector<Sample> out;
    out.reserve(posts.size());
    for (auto& p : posts) {
        out.push_back({std::move(p.id), std::move(p.text), label_sbic(p.scores), Dataset::SBIC,
                       std::nullopt});
    }
    return out;
}

std::vector<Sample> ingest_toxigen(const csv::Table& t, const ColumnMap& cols) {
    const auto w = t.header.size();
    const auto text_i = require_column(t, cols.text, "text");
    const auto human_i = require_column(t, cols.score, "human toxicity");
    const auto model_i = require_column(t, cols.model_score, "model toxicity");
    const auto id_i = optional_column(t, cols.id);
    const auto split_i = optional_column(t, cols.split);
    std::vector<Sample> out;
    for (const auto& row : t.rows) {
        const auto& hf = field_at(row, human_i, w);
        const auto& mf = field_at(row, model_i, w);
        if (trim(hf).empty() || trim(mf).empty()) {
            fail(ErrorKind::Ingest, row_ref(row) + ": missing toxicity score");
        }
        const double human = parse_score(hf, row, cols.score);
        const double model = parse_score(mf, row, cols.model_score);
        if (human < 0.0 || model < 0.0) {
            fail(ErrorKind::Ingest, row_ref(row) + ": negative toxicity score");
        }
        std::optional<Split> split;
        if (split_i) {
            try {
                split = parse_split(trim(field_at(row, *split_i, w)));
            } catch (const Error& e) {
                fail(ErrorKind::Ingest, row_ref(row) + ": " + e.what());
            }
        }
        out.push_back({make_id(Dataset::ToxiGen, id_i, row, w, row.number - 1),
                       row_text(row, text_i, w), label_toxigen(human, model), Dataset::ToxiGen,
                       split});
    }
    return out;
}

std::vector<std::string> id_list(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array()) {
        fail(ErrorKind::Format, std::string("split file lacks array '") + key + "'");
    }
    return j[key].get<std::vector<std::string>>();
}

}  // namespace

std::string_view to_string(Dataset dataset) {
    switch (dataset) {
        case Dataset::IHC: return "IHC";
        case Dataset::SBIC: return "SBIC";
        case Dataset::DynaHate: return "DynaHate";
        case Dataset::ToxiGen: return "ToxiGen";
    }
    return "?";
}

Dataset parse_dataset(std::string_view name) {
    const auto n = lower(name);
    if (n == "ihc") return Dataset::IHC;
    if (n == "sbic") return Dataset::SBIC;
    if (n == "dynahate") return Dataset::DynaHate;
    if (n == "toxigen") return Dataset::ToxiGen;
    fail(ErrorKind::Config, "unknown dataset '" + std::string(name) + "'");
}

std::string_view to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view name) {
    const auto n = lower(name);
    if (n == "train") return Split::Train;
    if (n == "validation" || n == "val" || n == "dev") return Split::Validation;
    if (n == "test") return Split::Test;
    fail(ErrorKind::Config, "unknown split '" + std::string(name) + "'");
}

SampleSet::SampleSet(Dataset source, std::vector<Sample> samples)
    : source_(source), samples_(std::move(samples)) {
    std::unordered_set<std::string> seen;
    seen.reserve(samples_.size());
    for (const auto& s : samples_) {
        if (!seen.insert(s.id).second) fail(ErrorKind::Ingest, "duplicate sample id '" + s.id + "'");
        if (trim(s.text).empty()) fail(ErrorKind::Ingest, "sample '" + s.id + "' has empty text");
        (s.label == Label::Hate ? counts_.hate : counts_.not_hate)++;
    }
}

bool SampleSet::has_source_split() const {
    return !samples_.empty() &&
           std::all_of(samples_.begin(), samples_.end(), [](const Sample& s) { return s.split.has_value(); });
}

SplitRatios default_ratios(Dataset dataset) {
    switch (dataset) {
        case Dataset::IHC:
        case Dataset::DynaHate: return {0.6, 0.2, 0.2};
        case Dataset::SBIC: return {0.8, 0.1, 0.1};
        case Dataset::ToxiGen: return {0.7, 0.1, 0.2};
    }
    return {};
}

const std::vector<std::string>& SplitAssignment::ids(Split split) const {
    switch (split) {
        case Split::Train: return train;
        case Split::Validation: return validation;
        case Split::Test: return test;
    }
    return test;
}

Label label_sbic(std::span<const double> offensiveness_scores) {
    if (offensiveness_scores.empty()) fail(ErrorKind::Ingest, "no offensiveness scores to aggregate");
    double sum = 0.0;
    for (double s : offensiveness_scores) {
        if (!(s >= 0.0 && s <= 1.0)) fail(ErrorKind::Ingest, "offensiveness score outside [0,1]");
        sum += s;
    }
    const double mean = sum / static_cast<double>(offensiveness_scores.size());
    return mean >= 0.5 ? Label::Hate : Label::NotHate;
}

Label label_toxigen(double human_toxicity, double model_toxicity) {
    if (!std::isfinite(human_toxicity) || !std::isfinite(model_toxicity) || human_toxicity < 0.0 ||
        model_toxicity < 0.0) {
        fail(ErrorKind::Ingest, "toxicity scores must be finite and nonnegative");
    }
    return human_toxicity + model_toxicity > 5.5 ? Label::Hate : Label::NotHate;
}

ColumnMap default_columns(Dataset dataset) {
    ColumnMap c;
    switch (dataset) {
        case Dataset::IHC:
            c.text = "post";
            c.label = "class";
            break;
        case Dataset::SBIC:
            c.text = "post";
            c.score = "offensiveYN";
            break;
        case Dataset::DynaHate:
            c.text = "text";
            c.label = "label";
            break;
        case Dataset::ToxiGen:
            c.text = "text";
            c.score = "toxicity_human";
            c.model_score = "toxicity_ai";
            c.split = "split";
            break;
    }
    return c;
}

SampleSet ingest_text(Dataset kind, std::string_view contents, const ColumnMap& columns) {
    if (columns.delimiter == '\0') fail(ErrorKind::Config, "ingest_text requires an explicit delimiter");
    const auto table = csv::parse(contents, columns.delimiter);
    if (table.rows.empty()) fail(ErrorKind::Ingest, "file has a header but no data rows");
    std::vector<Sample> samples;
    switch (kind) {
        case Dataset::IHC: samples = ingest_ihc(table, columns); break;
        case Dataset::SBIC: samples = ingest_sbic(table, columns); break;
        case Dataset::DynaHate: samples = ingest_dynahate(table, columns); break;
        case Dataset::ToxiGen: samples = ingest_toxigen(table, columns); break;
    }
    return SampleSet(kind, std::move(samples));
}

SampleSet ingest(Dataset kind, const std::filesystem::path& source_path, const ColumnMap& columns) {
    if (!std::filesystem::exists(source_path)) {
        fail(ErrorKind::Ingest, "source file not found: " + source_path.string());
    }
    auto cols = columns;
    if (cols.delimiter == '\0') cols.delimiter = lower(source_path.extension().string()) == ".tsv" ? '\t' : ',';
    const auto contents = read_file(source_path);
    try {
        return ingest_text(kind, contents, cols);
    } catch (const Error& e) {
        throw Error(e.kind(), source_path.string() + ": " + e.what());
    }
}

SampleSet ingest(Dataset kind, const std::filesystem::path& source_path) {
    return ingest(kind, source_path, default_columns(kind));
}

LabelCounts reference_counts(Dataset dataset) {
    switch (dataset) {
        case Dataset::IHC: return {13206, 5460};
        case Dataset::DynaHate: return {18969, 22175};
        case Dataset::SBIC: return {20733, 24048};
        case Dataset::ToxiGen: return {6126, 3774};
    }
    return {};
}

std::optional<std::string> count_discrepancy(const SampleSet& set) {
    const auto ref = reference_counts(set.source());
    if (set.counts() == ref) return std::nullopt;
    std::ostringstream os;
    os << to_string(set.source()) << ": ingested " << set.size() << " samples (hate "
       << set.counts().hate << ", not hate " << set.counts().not_hate << "); reference release has "
       << ref.total() << " (hate " << ref.hate << ", not hate " << ref.not_hate << ")";
    if (set.source() == Dataset::DynaHate) os << "; the dataset description also quotes 41,255 entries";
    return os.str();
}

SplitAssignment make_splits(const SampleSet& samples, const SplitRatios& ratios, std::uint64_t seed,
                            bool stratify) {
    if (!(ratios.train > 0.0 && ratios.validation > 0.0 && ratios.test > 0.0) ||
        std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
        fail(ErrorKind::Config, "split ratios must be positive and sum to 1");
    }
    if (samples.empty()) fail(ErrorKind::Config, "cannot split an empty sample set");

    const auto& all = samples.samples();
    const std::size_t n = all.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);

    if (!stratify) {
        shuffle(std::span(order), rng);
    } else {
        // Shuffle each class, then merge by fractional rank so every prefix of
        // the order holds the classes in (nearly) their global proportion.
        std::array<std::vector<std::size_t>, 2> by_class;
        for (std::size_t i = 0; i < n; ++i) by_class[static_cast<int>(all[i].label)].push_back(i);
        std::vector<std::pair<double, std::size_t>> keyed;
        keyed.reserve(n);
        for (int c = 0; c < 2; ++c) {
            auto& idx = by_class[c];
            shuffle(std::span(idx), rng);
            for (std::size_t r = 0; r < idx.size(); ++r) {
                keyed.emplace_back((static_cast<double>(r) + 0.5) / static_cast<double>(idx.size()), idx[r]);
            }
        }
        std::stable_sort(keyed.begin(), keyed.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 0; i < n; ++i) order[i] = keyed[i].second;
    }

    // The small slack keeps products such as 0.7 * 10 from flooring to 6.
    const auto count = [n](double r) {
        return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
    };
    const std::size_t n_train = count(ratios.train);
    const std::size_t n_val = std::min(count(ratios.validation), n - n_train);

    SplitAssignment out;
    out.ratios = ratios;
    out.seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& id = all[order[i]].id;
        if (i < n_train) {
            out.train.push_back(id);
        } else if (i < n_train + n_val) {
            out.validation.push_back(id);
        } else {
            out.test.push_back(id);
        }
    }
    return out;
}

SplitAssignment source_splits(const SampleSet& samples) {
    if (!samples.has_source_split()) {
        fail(ErrorKind::Config, "samples do not carry a source split");
    }
    SplitAssignment out;
    out.from_source = true;
    for (const auto& s : samples.samples()) {
        switch (*s.split) {
            case Split::Train: out.train.push_back(s.id); break;
            case Split::Validation: out.validation.push_back(s.id); break;
            case Split::Test: out.test.push_back(s.id); break;
        }
    }
    const double n = static_cast<double>(samples.size());
    out.ratios = {out.train.size() / n, out.validation.size() / n, out.test.size() / n};
    return out;
}

std::string to_jsonl(const SampleSet& set, const SplitAssignment* splits) {
    std::unordered_map<std::string_view, Split> assigned;
    if (splits) {
        for (auto sp : {Split::Train, Split::Validation, Split::Test}) {
            for (const auto& id : splits->ids(sp)) assigned.emplace(id, sp);
        }
    }
    std::string out;
    for (const auto& s : set.samples()) {
        json j = {{"id", s.id},
                  {"text", s.text},
                  {"label", static_cast<int>(s.label)},
                  {"dataset", to_string(s.dataset)}};
        std::optional<Split> split = s.split;
        if (auto it = assigned.find(s.id); it != assigned.end()) split = it->second;
        if (split) j["split"] = to_string(*split);
        out += j.dump(-1, ' ', false, json::error_handler_t::strict);
        out += '\n';
    }
    return out;
}

SampleSet samples_from_jsonl(std::string_view contents) {
    std::vector<Sample> samples;
    std::optional<Dataset> source;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < contents.size()) {
        auto end = contents.find('\n', pos);
        if (end == std::string_view::npos) end = contents.size();
        const auto line = trim(contents.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = json::parse(line);
            Sample s;
            s.id = j.at("id").get<std::string>();
            s.text = j.at("text").get<std::string>();
            const int label = j.at("label").get<int>();
            if (label != 0 && label != 1) fail(ErrorKind::Format, "label must be 0 or 1");
            s.label = static_cast<Label>(label);
            s.dataset = parse_dataset(j.at("dataset").get<std::string>());
            if (j.contains("split") && !j["split"].is_null()) s.split = parse_split(j["split"].get<std::string>());
            if (!source) source = s.dataset;
            samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            fail(ErrorKind::Format, "samples line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            fail(ErrorKind::Format, "samples line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (samples.empty()) fail(ErrorKind::Format, "samples file has no records");
    return SampleSet(*source, std::move(samples));
}

void write_samples(const std::filesystem::path& path, const SampleSet& set, const SplitAssignment* splits) {
    write_file_atomic(path, to_jsonl(set, splits));
}

SampleSet read_samples(const std::filesystem::path& path) {
    try {
        return samples_from_jsonl(read_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::string to_json(const SplitAssignment& splits) {
    json j = {{"seed", splits.seed},
              {"ratios", {splits.ratios.train, splits.ratios.validation, splits.ratios.test}},
              {"from_source", splits.from_source},
              {"train", splits.train},
              {"validation", splits.validation},
              {"test", splits.test}};
    return j.dump(2) + "\n";
}

SplitAssignment splits_from_json(std::string_view contents) {
    try {
        const auto j = json::parse(contents);
        SplitAssignment s;
        s.seed = j.at("seed").get<std::uint64_t>();
        const auto r = j.at("ratios").get<std::vector<double>>();
        if (r.size() != 3) fail(ErrorKind::Format, "split ratios must have three entries");
        s.ratios = {r[0], r[1], r[2]};
        s.from_source = j.value("from_source", false);
        s.train = id_list(j, "train");
        s.validation = id_list(j, "validation");
        s.test = id_list(j, "test");
        return s;
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("split file: ") + e.what());
    }
}

void write_splits(const std::filesystem::path& path, const SplitAssignment& splits) {
    write_file_atomic(path, to_json(splits));
}

SplitAssignment read_splits(const std::filesystem::path& path) {
    return splits_from_json(read_file(path));
}

}  // namespace ihs
