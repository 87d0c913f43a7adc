#include "doctest.h"

#include "stlfer/diversity.hpp"
#include "stlfer/random.hpp"
#include "test_helpers.hpp"

#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>

using namespace stlfer;
using testing::bitwise_equal;

namespace {

ArchitectureSpec tiny_base() {
    ArchitectureSpec s;
    s.depth = 1;
    s.latent_size = 4;
    s.filters = {2};
    s.input_h = 8;
    s.input_w = 8;
    s.epochs = 2;
    s.learning_rate = 0.01;
    s.seed = 5;
    return s;
}

ImageSet tiny_images(int n, int h, int w, std::uint64_t seed) {
    RandomStream rng(seed);
    ImageSet images;
    for (int i = 0; i < n; ++i) {
        Tensor img({h, w, 1});
        for (std::size_t j = 0; j < img.size(); ++j) img[j] = rng.uniform_real();
        images.push_back(std::move(img));
    }
    return images;
}

}  // namespace

TEST_CASE("seed strategy") {
    ArchitectureSpec base = tiny_base();
    auto specs = generate_seed_specs(10, base, 99);
    REQUIRE(specs.size() == 10);
    std::set<int> seeds;
    for (const auto& s : specs) {
        CHECK(s.strategy == "seed");
        CHECK(s.dataset_id == "kyoto");
        CHECK(s.arch.seed >= 0);
        CHECK(s.arch.seed <= 1000);
        seeds.insert(s.arch.seed);
        ArchitectureSpec rest = s.arch;
        rest.seed = base.seed;
        CHECK(rest == base);
    }
    CHECK(seeds.size() == 10);  // without replacement

    CHECK(generate_seed_specs(1, base, 99).size() == 1);
    CHECK(generate_seed_specs(10, base, 99) == specs);   // determinism
    CHECK(generate_seed_specs(1001, base, 7).size() == 1001);
    CHECK_THROWS_AS(generate_seed_specs(0, base, 99), std::invalid_argument);
    CHECK_THROWS_AS(generate_seed_specs(1002, base, 99), std::invalid_argument);
}

TEST_CASE("dataset strategy") {
    ArchitectureSpec base = tiny_base();
    auto specs = generate_dataset_specs({"kyoto", "lfw-face", "lfw", "stl-10"}, base);
    REQUIRE(specs.size() == 4);
    CHECK(specs[0].dataset_id == "kyoto");
    CHECK(specs[3].dataset_id == "stl-10");
    for (const auto& s : specs) {
        CHECK(s.strategy == "dataset");
        CHECK(s.arch == base);
    }
    CHECK(generate_dataset_specs({"solo"}, base).size() == 1);
    CHECK_THROWS_AS(generate_dataset_specs({"a", "a"}, base), std::invalid_argument);
    CHECK_THROWS_AS(generate_dataset_specs({}, base), std::invalid_argument);
}

TEST_CASE("architecture-depth strategy") {
    ArchitectureSpec base;
    base.depth = 5;
    base.latent_size = 64;
    base.filters = {2, 3, 4, 5, 6};
    base.input_h = 32;
    base.input_w = 32;
    base.epochs = 1;
    auto specs = generate_depth_specs(5, base);
    REQUIRE(specs.size() == 5);
    for (int i = 0; i < 5; ++i) {
        const auto& a = specs[static_cast<std::size_t>(i)].arch;
        CHECK(a.depth == 5 - i);
        CHECK(a.latent_size == 64);
        CHECK(static_cast<int>(a.filters.size()) == a.depth);
        for (int f = 0; f < a.depth; ++f)
            CHECK(a.filters[static_cast<std::size_t>(f)] ==
                  base.filters[static_cast<std::size_t>(f)]);
        CHECK(specs[static_cast<std::size_t>(i)].strategy == "architecture");
    }
    ArchitectureSpec one = tiny_base();
    CHECK(generate_depth_specs(1, one).size() == 1);
    CHECK_THROWS_AS(generate_depth_specs(0, one), std::invalid_argument);
}

TEST_CASE("latent strategy") {
    ArchitectureSpec base = tiny_base();
    std::vector<int> sizes = {150, 200, 250, 300, 400, 500, 1000, 1500, 2000, 2500};
    auto specs = generate_latent_specs(sizes, base);
    REQUIRE(specs.size() == 10);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        CHECK(specs[i].arch.latent_size == sizes[i]);
        CHECK(specs[i].arch.depth == base.depth);
        CHECK(specs[i].arch.seed == base.seed);
        CHECK(specs[i].strategy == "latent");
    }
    CHECK(generate_latent_specs({2500}, base).size() == 1);
    CHECK_THROWS_AS(generate_latent_specs({}, base), std::invalid_argument);
    CHECK_THROWS_AS(generate_latent_specs({100, 100}, base), std::invalid_argument);
}

TEST_CASE("build_pool") {
    ArchitectureSpec base = tiny_base();
    DatasetRegistry registry;
    registry["kyoto"] = tiny_images(6, 8, 8, 11);

    SUBCASE("seed pool members have distinct weights") {
        auto specs = generate_seed_specs(3, base, 21);
        RepresentationPool pool = build_pool(specs, registry);
        REQUIRE(pool.members.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(pool.members[i].spec == specs[i]);
            CHECK(pool.members[i].loss_history.size() == 2);
        }
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i + 1; j < 3; ++j)
                CHECK_FALSE(bitwise_equal(pool.members[i].encoder.dense_w,
                                          pool.members[j].encoder.dense_w));
    }
    SUBCASE("combined strategies yield 29 representations") {
        ArchitectureSpec wide;
        wide.depth = 5;
        wide.latent_size = 8;
        wide.filters = {1, 1, 1, 1, 1};
        wide.input_h = 32;
        wide.input_w = 32;
        wide.epochs = 1;
        wide.seed = 2;
        DatasetRegistry reg;
        reg["kyoto"] = tiny_images(3, 32, 32, 1);
        reg["lfw-face"] = tiny_images(3, 32, 32, 2);
        reg["lfw"] = tiny_images(3, 32, 32, 3);
        reg["stl-10"] = tiny_images(3, 32, 32, 4);

        auto specs = generate_seed_specs(10, wide, 5);
        auto ds = generate_dataset_specs({"kyoto", "lfw-face", "lfw", "stl-10"}, wide);
        auto depth = generate_depth_specs(5, wide);
        auto latent = generate_latent_specs({4, 5, 6, 7, 8, 9, 10, 11, 12, 13}, wide);
        specs.insert(specs.end(), ds.begin(), ds.end());
        specs.insert(specs.end(), depth.begin(), depth.end());
        specs.insert(specs.end(), latent.begin(), latent.end());
        REQUIRE(specs.size() == 29);

        RepresentationPool pool = build_pool(specs, reg);
        CHECK(pool.members.size() == 29);
        for (std::size_t i = 0; i < specs.size(); ++i) CHECK(pool.members[i].spec == specs[i]);
    }
    SUBCASE("error paths") {
        CHECK_THROWS_AS(build_pool({}, registry), std::invalid_argument);
        auto specs = generate_seed_specs(2, base, 3, "nonexistent");
        CHECK_THROWS_AS(build_pool(specs, registry), std::invalid_argument);
    }
}

TEST_CASE("spec lists are replayable") {
    ArchitectureSpec base = tiny_base();
    base.learning_rate = 0.0125;
    auto specs = generate_seed_specs(4, base, 17);
    auto latent = generate_latent_specs({4, 9}, base);
    specs.insert(specs.end(), latent.begin(), latent.end());

    auto path = (std::filesystem::temp_directory_path() / "stlfer_specs.txt").string();
    save_spec_list(specs, path);
    auto loaded = load_spec_list(path);
    CHECK(loaded == specs);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_spec_list("/nonexistent/specs.txt"), std::runtime_error);
}
