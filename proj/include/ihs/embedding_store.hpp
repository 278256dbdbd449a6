// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ihs/io.hpp"

namespace ihs {

/// Prefix prepended to every text before it reaches the encoder. Byte-exact;
/// a single space follows "Query:".
inline constexpr std::string_view kInstructionPrefix =
    "Instruct: classify the following in no hate or hate.\nQuery: ";

const Digest& instruction_digest();

std::string build_instruction_text(std::string_view raw_text);

enum class Pooling { NormalizedSum, MeanPassthrough, None };

std::string_view to_string(Pooling pooling);
Pooling parse_pooling(std::string_view name);

/// Reduces a k x n token matrix to one n-vector. Only real tokens may be
/// passed; padding rows would bias both reductions.
Eigen::VectorXd pool_tokens(const Eigen::MatrixXd& token_matrix, Pooling method);

struct EmbeddingRecord {
    std::string sample_id;
    std::vector<float> vector;

    bool operator==(const EmbeddingRecord&) const = default;
};

/// Id -> vector cache with the provenance of the encoder that produced it.
/// Records keep insertion order so that serialization is reproducible.
class EmbeddingStore {
public:
    EmbeddingStore(std::string model_id, Pooling pooling, std::size_t dimension,
                   Digest instruction_digest = ihs::instruction_digest());

    const std::string& model_id() const { return model_id_; }
    Pooling pooling() const { return pooling_; }
    std::size_t dimension() const { return dimension_; }
    const Digest& instruction_digest() const { return instruction_digest_; }
    const std::vector<EmbeddingRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    /// Rejects duplicate ids, wrong dimensions and non-finite values.
    void add(std::string sample_id, std::vector<float> vector);

    bool contains(std::string_view sample_id) const;
    /// Throws a Lookup error naming the id when absent.
    std::span<const float> lookup(std::string_view sample_id) const;

    /// Positions for a sample: the record itself when present, otherwise the
    /// per-token records "<id>#0", "<id>#1", ... stored for unpooled caches.
    Eigen::MatrixXd lookup_sequence(std::string_view sample_id) const;

    bool operator==(const EmbeddingStore& other) const;

private:
    std::string model_id_;
    Pooling pooling_;
    std::size_t dimension_;
    Digest instruction_digest_;
    std::vector<EmbeddingRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

Eigen::VectorXd lookup(const EmbeddingStore& store, std::string_view sample_id);

// EMBC cache layout, little-endian:
//   "EMBC" | u32 version (1) | u32 header length | header JSON
//   {"count","dim","instruction_sha256","model_id","pooling"}
//   then per record: u16 id length | id bytes | dim x f32
inline constexpr std::uint32_t kCacheVersion = 1;

std::string encode_cache(const EmbeddingStore& store);
EmbeddingStore decode_cache(std::string_view bytes);
void write_cache(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore read_cache(const std::filesystem::path& path);

inline constexpr std::size_t kEmotionClasses = 7;
inline constexpr std::array<std::string_view, kEmotionClasses> kEmotionOrder = {
    "fear", "disgust", "surprise", "anger", "sadness", "joy", "other"};

/// Per-sample inputs of a classifier. Sequences hold one row per position;
/// pooled caches give a single row.
struct FeatureBundle {
    Eigen::MatrixXd tweet;
    std::optional<Eigen::MatrixXd> context;
    std::optional<Eigen::VectorXd> emotion;
};

/// Throws a Validation error unless the vector is a 7-class distribution.
void validate_emotion(const Eigen::VectorXd& emotion);

/// Role-keyed stores consumed by a run. Context and emotion are optional;
/// models that need them fail when they are absent.
struct FeatureStores {
    const EmbeddingStore* tweet = nullptr;
    const EmbeddingStore* context = nullptr;
    const EmbeddingStore* emotion = nullptr;
};

FeatureBundle resolve_features(const FeatureStores& stores, std::string_view sample_id,
                               bool need_context, bool need_emotion);

}  // namespace ihs
