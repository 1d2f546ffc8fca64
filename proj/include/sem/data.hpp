#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sem/relevance.hpp"
#include "sem/tensor.hpp"

namespace sem {

struct ImageShape {
    Index channels = 3;
    Index height = 32;
    Index width = 32;
    Index size() const { return channels * height * width; }
};

/// Samples as rows of `features` (images flattened channel-major).
struct DatasetHandle {
    Matrix features;
    std::vector<int> labels;
    int num_classes = 0;
    std::optional<ImageShape> image_shape;
    std::optional<SuperclassMap> superclasses;
    std::string provenance;

    Index size() const { return features.rows(); }
    Index dim() const { return features.cols(); }
    /// Labels in [0, num_classes), row/label counts consistent.
    void validate() const;
};

/// Standard CIFAR binary layout: records of 1 label byte + 3072 pixel bytes.
DatasetHandle load_cifar_binary(const std::string& path);

struct ClusterParams {
    int n_classes = 6;
    int samples_per_class = 300;
    Index dim = 32;
    Scalar spread = 1.0;
    Scalar mean_scale = 1.0;
    std::uint64_t seed = 0;
};

/// Gaussian clusters around seed-deterministic means; consecutive class
/// pairs share a superclass.
DatasetHandle synth_clusters(const ClusterParams& params);

DatasetHandle subset(const DatasetHandle& ds, const std::vector<Index>& rows);

struct DatasetSplit {
    DatasetHandle train;
    DatasetHandle validation;
};

/// Seed-deterministic shuffled split; `train_fraction` of rows go to train.
DatasetSplit split_dataset(const DatasetHandle& ds, Scalar train_fraction, std::uint64_t seed);

}  // namespace sem
