// SPDX-License-Identifier: Apache-2.0
#include "ihs/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "ihs/error.hpp"

namespace ihs {

using nlohmann::json;

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }

    bool read_u16(std::uint16_t& v) {
        if (remaining() < 2) return false;
        v = static_cast<std::uint16_t>(byte(0) | byte(1) << 8);
        pos_ += 2;
        return true;
    }
    bool read_u32(std::uint32_t& v) {
        if (remaining() < 4) return false;
        v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte(i)) << (8 * i);
        pos_ += 4;
        return true;
    }
    bool read_bytes(std::size_t n, std::string_view& out) {
        if (remaining() < n) return false;
        out = bytes_.substr(pos_, n);
        pos_ += n;
        return true;
    }

private:
    std::uint32_t byte(std::size_t i) const { return static_cast<unsigned char>(bytes_[pos_ + i]); }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

const Digest& instruction_digest() {
    static const Digest d = sha256(kInstructionPrefix);
    return d;
}

std::string build_instruction_text(std::string_view raw_text) {
    if (raw_text.empty()) fail(ErrorKind::Validation, "cannot build instruction text for empty input");
    std::string out;
    out.reserve(kInstructionPrefix.size() + raw_text.size());
    out.append(kInstructionPrefix);
    out.append(raw_text);
    return out;
}

std::string_view to_string(Pooling pooling) {
    switch (pooling) {
        case Pooling::NormalizedSum: return "normalized_sum";
        case Pooling::MeanPassthrough: return "mean_passthrough";
        case Pooling::None: return "none";
    }
    return "?";
}

Pooling parse_pooling(std::string_view name) {
    if (name == "normalized_sum") return Pooling::NormalizedSum;
    if (name == "mean_passthrough") return Pooling::MeanPassthrough;
    if (name == "none") return Pooling::None;
    fail(ErrorKind::Format, "unknown pooling '" + std::string(name) + "'");
}

Eigen::VectorXd pool_tokens(const Eigen::MatrixXd& token_matrix, Pooling method) {
    if (token_matrix.rows() < 1 || token_matrix.cols() < 1) {
        fail(ErrorKind::Shape, "pooling needs at least one token and one column");
    }
    if (!token_matrix.allFinite()) fail(ErrorKind::Numerical, "token matrix has non-finite entries");
    switch (method) {
        case Pooling::NormalizedSum: {
            Eigen::VectorXd sum = token_matrix.colwise().sum().transpose();
            const double norm = sum.norm();
            if (norm == 0.0) fail(ErrorKind::Numerical, "normalized sum of tokens has zero norm");
            return sum / norm;
        }
        case Pooling::MeanPassthrough:
            return token_matrix.colwise().mean().transpose();
        case Pooling::None:
            if (token_matrix.rows() != 1) {
                fail(ErrorKind::Shape, "pooling 'none' expects exactly one row, got " +
                                           std::to_string(token_matrix.rows()));
            }
            return token_matrix.row(0).transpose();
    }
    return {};
}

EmbeddingStore::EmbeddingStore(std::string model_id, Pooling pooling, std::size_t dimension,
                               Digest instruction_digest)
    : model_id_(std::move(model_id)),
      pooling_(pooling),
      dimension_(dimension),
      instruction_digest_(instruction_digest) {
    if (dimension_ == 0) fail(ErrorKind::Validation, "embedding dimension must be positive");
}

void EmbeddingStore::add(std::string sample_id, std::vector<float> vector) {
    if (sample_id.size() > std::numeric_limits<std::uint16_t>::max()) {
        fail(ErrorKind::Validation, "sample id longer than 65535 bytes");
    }
    if (vector.size() != dimension_) {
        fail(ErrorKind::Validation, "record '" + sample_id + "' has dimension " +
                                        std::to_string(vector.size()) + ", store expects " +
                                        std::to_string(dimension_));
    }
    for (float v : vector) {
        if (!std::isfinite(v)) fail(ErrorKind::Validation, "record '" + sample_id + "' has non-finite values");
    }
    if (index_.contains(sample_id)) fail(ErrorKind::Validation, "duplicate sample id '" + sample_id + "'");
    index_.emplace(sample_id, records_.size());
    records_.push_back({std::move(sample_id), std::move(vector)});
}

bool EmbeddingStore::contains(std::string_view sample_id) const {
    return index_.contains(std::string(sample_id));
}

std::span<const float> EmbeddingStore::lookup(std::string_view sample_id) const {
    const auto it = index_.find(std::string(sample_id));
    if (it == index_.end()) {
        fail(ErrorKind::Lookup, "no embedding for sample id '" + std::string(sample_id) + "' in store '" +
                                    model_id_ + "'");
    }
    return records_[it->second].vector;
}

Eigen::MatrixXd EmbeddingStore::lookup_sequence(std::string_view sample_id) const {
    const auto as_row = [](std::span<const float> v) {
        Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) r[static_cast<Eigen::Index>(i)] = v[i];
        return r;
    };
    if (contains(sample_id)) {
        Eigen::MatrixXd m(1, static_cast<Eigen::Index>(dimension_));
        m.row(0) = as_row(lookup(sample_id));
        return m;
    }
    std::vector<std::span<const float>> rows;
    const std::string base = std::string(sample_id) + "#";
    for (std::size_t k = 0;; ++k) {
        const auto it = index_.find(base + std::to_string(k));
        if (it == index_.end()) break;
        rows.push_back(records_[it->second].vector);
    }
    if (rows.empty()) lookup(sample_id);  // throws the canonical lookup error
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dimension_));
    for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = as_row(rows[k]);
    return m;
}

bool EmbeddingStore::operator==(const EmbeddingStore& other) const {
    return model_id_ == other.model_id_ && pooling_ == other.pooling_ &&
           dimension_ == other.dimension_ && instruction_digest_ == other.instruction_digest_ &&
           records_ == other.records_;
}

Eigen::VectorXd lookup(const EmbeddingStore& store, std::string_view sample_id) {
    const auto v = store.lookup(sample_id);
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

std::string encode_cache(const EmbeddingStore& store) {
    const json header = {{"model_id", store.model_id()},
                         {"pooling", to_string(store.pooling())},
                         {"dim", store.dimension()},
                         {"count", store.size()},
                         {"instruction_sha256", to_hex(store.instruction_digest())}};
    const std::string header_text = header.dump();

    std::string out;
    out.reserve(12 + header_text.size() +
                store.size() * (2 + 16 + 4 * store.dimension()));
    out.append("EMBC");
    put_u32(out, kCacheVersion);
    put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out.append(header_text);
    for (const auto& r : store.records()) {
        put_u16(out, static_cast<std::uint16_t>(r.sample_id.size()));
        out.append(r.sample_id);
        for (float v : r.vector) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

EmbeddingStore decode_cache(std::string_view bytes) {
    Reader in(bytes);
    std::string_view magic;
    if (!in.read_bytes(4, magic) || magic != "EMBC") fail(ErrorKind::Format, "bad magic, not an EMBC cache");
    std::uint32_t version = 0;
    if (!in.read_u32(version)) fail(ErrorKind::Corruption, "truncated before format version");
    if (version != kCacheVersion) {
        fail(ErrorKind::Format, "unsupported cache version " + std::to_string(version));
    }
    std::uint32_t header_len = 0;
    std::string_view header_text;
    if (!in.read_u32(header_len) || !in.read_bytes(header_len, header_text)) {
        fail(ErrorKind::Corruption, "truncated cache header");
    }

    std::string model_id;
    Pooling pooling{};
    std::size_t dim = 0;
    std::size_t count = 0;
    Digest digest{};
    try {
        const auto h = json::parse(header_text);
        model_id = h.at("model_id").get<std::string>();
        pooling = parse_pooling(h.at("pooling").get<std::string>());
        dim = h.at("dim").get<std::size_t>();
        count = h.at("count").get<std::size_t>();
        digest = digest_from_hex(h.at("instruction_sha256").get<std::string>());
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("invalid cache header: ") + e.what());
    }
    if (dim == 0) fail(ErrorKind::Format, "cache header dimension must be positive");

    EmbeddingStore store(std::move(model_id), pooling, dim, digest);
    for (std::size_t i = 0; i < count; ++i) {
        const std::string rec = "record " + std::to_string(i);
        std::uint16_t id_len = 0;
        std::string_view id;
        if (!in.read_u16(id_len) || !in.read_bytes(id_len, id)) {
            fail(ErrorKind::Corruption, rec + ": truncated id");
        }
        const std::string named = rec + " ('" + std::string(id) + "')";
        if (in.remaining() < 4 * dim) {
            fail(ErrorKind::Corruption, named + ": expected " + std::to_string(dim) +
                                            " values, file ends after " +
                                            std::to_string(in.remaining() / 4));
        }
        std::vector<float> values(dim);
        for (auto& v : values) {
            std::uint32_t raw = 0;
            in.read_u32(raw);
            v = std::bit_cast<float>(raw);
        }
        try {
            store.add(std::string(id), std::move(values));
        } catch (const Error& e) {
            fail(ErrorKind::Corruption, named + ": " + e.what());
        }
    }
    if (in.remaining() != 0) {
        fail(ErrorKind::Corruption, std::to_string(in.remaining()) + " trailing bytes after record " +
                                        std::to_string(count == 0 ? 0 : count - 1) +
                                        "; record dimensions disagree with header dim " + std::to_string(dim));
    }
    return store;
}

void write_cache(const EmbeddingStore& store, const std::filesystem::path& path) {
    write_file_atomic(path, encode_cache(store));
}

EmbeddingStore read_cache(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_cache(bytes);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

void validate_emotion(const Eigen::VectorXd& emotion) {
    if (emotion.size() != static_cast<Eigen::Index>(kEmotionClasses)) {
        fail(ErrorKind::Validation, "emotion vector must have 7 entries, got " + std::to_string(emotion.size()));
    }
    if (!emotion.allFinite() || (emotion.array() < 0.0).any()) {
        fail(ErrorKind::Validation, "emotion probabilities must be finite and nonnegative");
    }
    if (std::abs(emotion.sum() - 1.0) > 1e-5) {
        fail(ErrorKind::Validation, "emotion probabilities must sum to 1");
    }
}

FeatureBundle resolve_features(const FeatureStores& stores, std::string_view sample_id, bool need_context,
                               bool need_emotion) {
    if (!stores.tweet) fail(ErrorKind::Config, "no tweet embedding store configured");
    FeatureBundle b;
    b.tweet = stores.tweet->lookup_sequence(sample_id);
    if (need_context) {
        if (!stores.context) fail(ErrorKind::Config, "model requires a context embedding store");
        b.context = stores.context->lookup_sequence(sample_id);
    }
    if (need_emotion) {
        if (!stores.emotion) fail(ErrorKind::Config, "model requires an emotion store");
        auto e = lookup(*stores.emotion, sample_id);
        try {
            validate_emotion(e);
        } catch (const Error& err) {
            fail(ErrorKind::Validation, "sample '" + std::string(sample_id) + "': " + err.what());
        }
        b.emotion = std::move(e);
    }
    return b;
}

}  // namespace ihs
