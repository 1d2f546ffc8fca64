#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sem/data.hpp"

using namespace sem;
namespace fs = std::filesystem;

namespace {

fs::path write_bytes(const std::string& name, const std::vector<unsigned char>& bytes) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    return p;
}

}  // namespace

TEST_CASE("cifar binary loader") {
    std::vector<unsigned char> bytes;
    for (int r = 0; r < 3; ++r) {
        bytes.push_back(static_cast<unsigned char>(2 * r));
        for (int j = 0; j < 3072; ++j) bytes.push_back(static_cast<unsigned char>((j + r) % 256));
    }
    const fs::path p = write_bytes("sem_cifar_fixture.bin", bytes);
    const DatasetHandle ds = load_cifar_binary(p.string());
    CHECK(ds.size() == 3);
    CHECK(ds.dim() == 3072);
    CHECK(ds.labels == std::vector<int>{0, 2, 4});
    CHECK(ds.num_classes == 5);
    REQUIRE(ds.image_shape.has_value());
    CHECK(ds.image_shape->size() == 3072);
    CHECK(ds.features(1, 0) == 1.0 / 255.0);
    CHECK(ds.features(2, 253) == 1.0);
    CHECK((ds.features.array() >= 0.0).all());

    const DatasetHandle empty = load_cifar_binary(write_bytes("sem_cifar_empty.bin", {}).string());
    CHECK(empty.size() == 0);
    CHECK(empty.num_classes == 0);
    empty.validate();
    CHECK_THROWS_AS(load_cifar_binary(write_bytes("sem_cifar_bad.bin", std::vector<unsigned char>(3074)).string()),
                    FormatError);
    CHECK_THROWS_AS(load_cifar_binary((fs::temp_directory_path() / "sem_missing_file.bin").string()), IoError);
}

TEST_CASE("synthetic clusters") {
    ClusterParams p;
    p.n_classes = 4;
    p.samples_per_class = 10;
    p.dim = 5;
    p.seed = 3;
    const DatasetHandle a = synth_clusters(p);
    const DatasetHandle b = synth_clusters(p);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK(a.size() == 40);
    CHECK(a.num_classes == 4);
    REQUIRE(a.superclasses.has_value());
    CHECK(a.superclasses->same_super(0, 1));
    CHECK_FALSE(a.superclasses->same_super(1, 2));
    a.validate();

    p.seed = 4;
    CHECK(synth_clusters(p).features != a.features);

    p.spread = 0.0;
    const DatasetHandle tight = synth_clusters(p);
    for (Index r = 0; r < tight.size(); ++r) {
        for (Index s = 0; s < tight.size(); ++s) {
            if (tight.labels[r] == tight.labels[s]) CHECK(tight.features.row(r) == tight.features.row(s));
        }
    }
}

TEST_CASE("split is a deterministic partition") {
    ClusterParams p;
    p.samples_per_class = 20;
    p.dim = 3;
    const DatasetHandle ds = synth_clusters(p);
    const DatasetSplit s1 = split_dataset(ds, 0.8, 5);
    const DatasetSplit s2 = split_dataset(ds, 0.8, 5);
    CHECK(s1.train.features == s2.train.features);
    CHECK(s1.train.size() == 96);
    CHECK(s1.validation.size() == 24);
    double total = 0.0;
    total += s1.train.features.sum() + s1.validation.features.sum();
    CHECK(total == doctest::Approx(ds.features.sum()));
    CHECK_THROWS_AS(split_dataset(ds, 1.5, 5), ParameterError);
}
