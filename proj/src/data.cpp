#include "sem/data.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>

#include "sem/csv.hpp"
#include "sem/rng.hpp"

namespace sem {

void DatasetHandle::validate() const {
    if (static_cast<Index>(labels.size()) != features.rows()) {
        throw DataError("dataset label count does not match sample count");
    }
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw DataError("label outside [0, num_classes)");
    }
    if (image_shape && image_shape->size() != features.cols()) {
        throw DataError("image shape does not match feature width");
    }
    if (superclasses && static_cast<int>(superclasses->class_to_super.size()) != num_classes) {
        throw DataError("superclass map does not cover every class");
    }
}

DatasetHandle load_cifar_binary(const std::string& path) {
    constexpr std::size_t kRecord = 3073;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() % kRecord != 0) {
        throw FormatError(path + ": size " + std::to_string(bytes.size()) +
                          " is not a multiple of 3073");
    }
    const Index n = static_cast<Index>(bytes.size() / kRecord);
    DatasetHandle ds;
    ds.image_shape = ImageShape{3, 32, 32};
    ds.features.resize(n, 3072);
    ds.labels.resize(n);
    int max_label = -1;
    for (Index r = 0; r < n; ++r) {
        const unsigned char* rec = bytes.data() + r * kRecord;
        ds.labels[r] = rec[0];
        max_label = std::max(max_label, static_cast<int>(rec[0]));
        for (Index j = 0; j < 3072; ++j) ds.features(r, j) = rec[1 + j] / 255.0;
    }
    ds.num_classes = max_label + 1;
    ds.provenance = "cifar_binary(" + path + ")";
    return ds;
}

DatasetHandle synth_clusters(const ClusterParams& p) {
    if (p.n_classes < 1 || p.samples_per_class < 1 || p.dim < 1 || p.spread < 0.0) {
        throw ParameterError("synth_clusters parameters must be positive");
    }
    Rng mean_rng = Rng::stream(p.seed, "clusters/means");
    Rng sample_rng = Rng::stream(p.seed, "clusters/samples");
    Matrix means(p.n_classes, p.dim);
    for (Index i = 0; i < means.size(); ++i) means.data()[i] = p.mean_scale * mean_rng.normal();

    DatasetHandle ds;
    ds.num_classes = p.n_classes;
    ds.features.resize(static_cast<Index>(p.n_classes) * p.samples_per_class, p.dim);
    Index r = 0;
    for (int c = 0; c < p.n_classes; ++c) {
        for (int s = 0; s < p.samples_per_class; ++s, ++r) {
            for (Index j = 0; j < p.dim; ++j) {
                ds.features(r, j) = means(c, j) + p.spread * sample_rng.normal();
            }
            ds.labels.push_back(c);
        }
    }
    SuperclassMap map;
    for (int c = 0; c < p.n_classes; ++c) {
        map.class_names.push_back("class_" + std::to_string(c));
        map.class_to_super.push_back(c / 2);
    }
    for (int s = 0; s < (p.n_classes + 1) / 2; ++s) map.super_names.push_back("super_" + std::to_string(s));
    ds.superclasses = std::move(map);
    ds.provenance = "synth_clusters(n_classes=" + std::to_string(p.n_classes) +
                    ",samples_per_class=" + std::to_string(p.samples_per_class) +
                    ",dim=" + std::to_string(p.dim) + ",spread=" + format_double(p.spread) +
                    ",mean_scale=" + format_double(p.mean_scale) +
                    ",seed=" + std::to_string(p.seed) + ")";
    return ds;
}

DatasetHandle subset(const DatasetHandle& ds, const std::vector<Index>& rows) {
    DatasetHandle out;
    out.num_classes = ds.num_classes;
    out.image_shape = ds.image_shape;
    out.superclasses = ds.superclasses;
    out.provenance = ds.provenance;
    out.features.resize(static_cast<Index>(rows.size()), ds.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<Index>(i)) = ds.features.row(rows[i]);
        out.labels.push_back(ds.labels.at(rows[i]));
    }
    return out;
}

DatasetSplit split_dataset(const DatasetHandle& ds, Scalar train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ParameterError("train fraction must lie in (0, 1)");
    }
    std::vector<Index> order(ds.size());
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng = Rng::stream(seed, "split");
    for (Index i = ds.size() - 1; i > 0; --i) {
        std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i + 1))]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * ds.size()));
    std::vector<Index> tr(order.begin(), order.begin() + n_train);
    std::vector<Index> va(order.begin() + n_train, order.end());
    return {subset(ds, tr), subset(ds, va)};
}

}  // namespace sem
