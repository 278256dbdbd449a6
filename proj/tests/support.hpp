// SPDX-License-Identifier: Apache-2.0
// Helpers shared by the unit tests and the acceptance binary.
#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ihs/dataset.hpp"
#include "ihs/embedding_store.hpp"
#include "ihs/model.hpp"
#include "ihs/random.hpp"

namespace ihs::testing {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(IHS_FIXTURE_DIR) / name;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("ihs-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * standard_normal(rng);
    return m;
}

/// Random point strictly inside the 7-class simplex.
inline Eigen::VectorXd random_emotion(Rng& rng) {
    Eigen::VectorXd e(kEmotionClasses);
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = 0.05 + uniform_unit(rng);
    return e / e.sum();
}

/// Random inputs for `spec`; sequence models get `positions` rows per source.
inline std::vector<FeatureBundle> random_batch(Rng& rng, const ModelSpec& spec, std::size_t n,
                                               Eigen::Index positions = 1) {
    const Eigen::Index k = spec.kind == ModelKind::SharedQueryFusion ? positions : 1;
    std::vector<FeatureBundle> batch;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureBundle b;
        b.tweet = random_matrix(rng, k, static_cast<Eigen::Index>(spec.d_tweet));
        if (spec.uses_context()) {
            // Unequal lengths exercise the padding of the attention.
            b.context = random_matrix(rng, k == 1 ? 1 : k + 1, static_cast<Eigen::Index>(spec.d_context));
        }
        if (spec.uses_emotion()) b.emotion = random_emotion(rng);
        batch.push_back(std::move(b));
    }
    return batch;
}

/// Two isotropic unit-variance Gaussians whose means are `separation` apart
/// along a random direction. Ids are "g<index>"; labels alternate.
struct GaussianData {
    SampleSet samples;
    SplitAssignment splits;
    EmbeddingStore store;
};

inline GaussianData two_gaussians(std::uint64_t seed, std::size_t dim, double separation, std::size_t n_train,
                                  std::size_t n_val, std::size_t n_test) {
    Rng rng(seed);
    Eigen::VectorXd direction = random_matrix(rng, static_cast<Eigen::Index>(dim), 1);
    direction.normalize();

    EmbeddingStore store("synthetic-gaussians", Pooling::MeanPassthrough, dim);
    std::vector<Sample> samples;
    SplitAssignment splits;
    const std::size_t total = n_train + n_val + n_test;
    const double t = static_cast<double>(total);
    splits.ratios = {static_cast<double>(n_train) / t, static_cast<double>(n_val) / t,
                     static_cast<double>(n_test) / t};
    for (std::size_t i = 0; i < total; ++i) {
        const Label label = i % 2 == 0 ? Label::NotHate : Label::Hate;
        const double sign = label == Label::Hate ? 0.5 : -0.5;
        std::vector<float> v(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            v[d] = static_cast<float>(sign * separation * direction(static_cast<Eigen::Index>(d)) +
                                      standard_normal(rng));
        }
        const std::string id = "g" + std::to_string(i);
        store.add(id, std::move(v));
        samples.push_back({id, "synthetic sample " + std::to_string(i), label, Dataset::IHC, std::nullopt});
        auto& bucket = i < n_train ? splits.train : i < n_train + n_val ? splits.validation : splits.test;
        bucket.push_back(id);
    }
    return {SampleSet(Dataset::IHC, std::move(samples)), std::move(splits), std::move(store)};
}

}  // namespace ihs::testing
