#include "doctest.h"

#include "stlfer/eig.hpp"
#include "stlfer/features.hpp"
#include "stlfer/random.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

using namespace stlfer;
using testing::bitwise_equal;

namespace {

LabeledDataset tiny_dataset(int n, int h, int w, std::uint64_t seed) {
    RandomStream rng(seed);
    LabeledDataset ds;
    ds.class_names = {"anger", "happy", "neutral"};
    for (int i = 0; i < n; ++i) {
        Tensor img({h, w, 1});
        for (std::size_t j = 0; j < img.size(); ++j) img[j] = rng.uniform_real();
        ds.samples.push_back({std::move(img), i % 3, "subj" + std::to_string(i % 2 + 1)});
    }
    return ds;
}

EncoderModel tiny_encoder(int h, int w, int latent) {
    ArchitectureSpec s;
    s.depth = 1;
    s.latent_size = latent;
    s.filters = {2};
    s.input_h = h;
    s.input_w = w;
    s.seed = 9;
    return encoder_of(build_architecture(s));
}

double column_variance(const Tensor& rows, int col) {
    int m = rows.dim(0);
    double mean = 0.0;
    for (int i = 0; i < m; ++i) mean += rows.at(i, col);
    mean /= m;
    double var = 0.0;
    for (int i = 0; i < m; ++i) {
        double d = rows.at(i, col) - mean;
        var += d * d;
    }
    return var / (m - 1);
}

}  // namespace

TEST_CASE("preprocess") {
    SUBCASE("matching grayscale input passes through unchanged") {
        RandomStream rng(2);
        Tensor img({96, 96, 1});
        for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform_real();
        Tensor out = preprocess(img, {});
        CHECK(bitwise_equal(out, img));
    }
    SUBCASE("downsampling halves the spatial dims") {
        Tensor img = Tensor::full({192, 192, 1}, 0.25);
        Tensor out = preprocess(img, {});
        CHECK(out.shape() == std::vector<int>{96, 96, 1});
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.25));
    }
    SUBCASE("gray RGB stays gray") {
        Tensor img = Tensor::full({96, 96, 3}, 0.5);
        Tensor out = preprocess(img, {});
        CHECK(out.shape() == std::vector<int>{96, 96, 1});
        CHECK(out.at(10, 10, 0) == 0.5);
    }
    SUBCASE("8-bit-range input is scaled into [0,1]") {
        Tensor img = Tensor::full({96, 96, 1}, 255.0);
        img.at(0, 0, 0) = 0.0;
        Tensor out = preprocess(img, {});
        CHECK(out.at(0, 0, 0) == 0.0);
        CHECK(out.at(5, 5, 0) == doctest::Approx(1.0));
    }
    SUBCASE("unsupported channel counts are rejected") {
        CHECK_THROWS_AS(preprocess(Tensor({8, 8, 2}), {}), std::invalid_argument);
        CHECK_THROWS_AS(preprocess(Tensor({8, 8}), {}), std::invalid_argument);
    }
}

TEST_CASE("extract_features") {
    EncoderModel enc = tiny_encoder(8, 8, 4);
    LabeledDataset ds = tiny_dataset(5, 8, 8, 31);

    SUBCASE("shape, order, and determinism") {
        FeatureMatrix fm = extract_features(enc, ds);
        CHECK(fm.count() == 5);
        CHECK(fm.width() == 4);
        CHECK(fm.labels == std::vector<int>{0, 1, 2, 0, 1});
        CHECK(fm.subject_ids[0] == "subj1");
        CHECK(fm.subject_ids[1] == "subj2");
        CHECK(fm.class_names == ds.class_names);

        // Duplicate samples produce identical rows.
        LabeledDataset dup;
        dup.class_names = ds.class_names;
        dup.samples.push_back(ds.samples[0]);
        dup.samples.push_back(ds.samples[0]);
        FeatureMatrix fd = extract_features(enc, dup);
        for (int j = 0; j < fd.width(); ++j) CHECK(fd.rows.at(0, j) == fd.rows.at(1, j));
    }
    SUBCASE("error paths") {
        LabeledDataset empty;
        empty.class_names = ds.class_names;
        CHECK_THROWS_AS(extract_features(enc, empty), std::invalid_argument);

        LabeledDataset bad = ds;
        bad.samples[1].image = Tensor({4, 4, 1});
        bool threw = false;
        try {
            extract_features(enc, bad);
        } catch (const std::invalid_argument& e) {
            threw = true;
            CHECK(std::string(e.what()).find("sample 1") != std::string::npos);
        }
        CHECK(threw);

        LabeledDataset badlabel = ds;
        badlabel.samples[2].label = 7;
        CHECK_THROWS_AS(extract_features(enc, badlabel), std::invalid_argument);

        LabeledDataset nosubj = ds;
        nosubj.samples[0].subject_id = "";
        CHECK_THROWS_AS(extract_features(enc, nosubj), std::invalid_argument);
    }
}

TEST_CASE("pca on hand-constructed data") {
    SUBCASE("points on the line y = x") {
        Tensor rows({4, 2}, {1, 1, 2, 2, 3, 3, 4, 4});
        PcaModel m = pca_fit(rows, 2);
        double dot = std::abs(m.components.at(0, 0) * (1 / std::sqrt(2.0)) +
                              m.components.at(0, 1) * (1 / std::sqrt(2.0)));
        CHECK(dot == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(m.explained_variances[1] == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("transforming the mean gives the zero vector") {
        RandomStream rng(5);
        Tensor rows({6, 3});
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = rng.uniform_real(-2, 2);
        PcaModel m = pca_fit(rows, 2);
        Tensor mean_row({1, 3}, {m.mean[0], m.mean[1], m.mean[2]});
        Tensor t = pca_transform(m, mean_row);
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(t[i]) < 1e-9);
    }
    SUBCASE("component-count preconditions") {
        Tensor rows({5, 10});
        CHECK_THROWS_AS(pca_fit(rows, 5), std::invalid_argument);  // max is M-1 = 4
        CHECK_THROWS_AS(pca_fit(rows, 0), std::invalid_argument);
        CHECK_THROWS_AS(pca_fit(Tensor({1, 4}), 1), std::invalid_argument);
    }
}

TEST_CASE("pca statistical properties") {
    SUBCASE("isotropic cloud has near-equal variances") {
        RandomStream rng(99);
        Tensor rows({10000, 3});
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = rng.gaussian(0.0, 1.0);
        PcaModel m = pca_fit(rows, 3);
        CHECK(m.explained_variances[0] / m.explained_variances[2] < 1.1);
    }
    SUBCASE("variance, decorrelation, and totals on the fit data") {
        RandomStream rng(14);
        Tensor rows({20, 6});
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = rng.uniform_real(-1, 3);
        PcaModel m = pca_fit(rows, 6);
        Tensor t = pca_transform(m, rows);

        for (int c = 0; c < 6; ++c)
            CHECK(column_variance(t, c) ==
                  doctest::Approx(m.explained_variances[static_cast<std::size_t>(c)])
                      .epsilon(1e-6));

        // Covariance of the transformed data is diagonal.
        double max_diag = m.explained_variances[0];
        for (int a = 0; a < 6; ++a)
            for (int b = a + 1; b < 6; ++b) {
                double acc = 0.0;
                double mean_a = 0.0, mean_b = 0.0;
                for (int i = 0; i < 20; ++i) {
                    mean_a += t.at(i, a);
                    mean_b += t.at(i, b);
                }
                mean_a /= 20;
                mean_b /= 20;
                for (int i = 0; i < 20; ++i)
                    acc += (t.at(i, a) - mean_a) * (t.at(i, b) - mean_b);
                acc /= 19;
                CHECK(std::abs(acc) / max_diag < 1e-6);
            }

        // Non-increasing variances, orthonormal components.
        for (int c = 1; c < 6; ++c)
            CHECK(m.explained_variances[static_cast<std::size_t>(c)] <=
                  m.explained_variances[static_cast<std::size_t>(c - 1)] + 1e-12);
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b) {
                double dot = 0.0;
                for (int j = 0; j < 6; ++j) dot += m.components.at(a, j) * m.components.at(b, j);
                CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-8);
            }
    }
    SUBCASE("full-rank fit captures the total variance") {
        RandomStream rng(21);
        Tensor rows({6, 10});
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = rng.uniform_real(-1, 1);
        PcaModel m = pca_fit(rows, 5);  // rank is M-1 = 5
        double total = 0.0;
        for (int j = 0; j < 10; ++j) total += column_variance(rows, j);
        double captured = 0.0;
        for (double v : m.explained_variances) captured += v;
        CHECK(captured == doctest::Approx(total).epsilon(1e-8));
    }
}

TEST_CASE("wide matrices take the gram route and agree with the direct solution") {
    RandomStream rng(77);
    const int m = 8, d = 20;
    Tensor rows({m, d});
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = rng.uniform_real(-1, 1);
    PcaModel model = pca_fit(rows, 7);  // d > M-1 forces the M x M path

    // Independent oracle: eigen-decompose the full d x d covariance directly.
    Tensor mean({d});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += rows.at(i, j);
    for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] /= m;
    Tensor cov({d, d});
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i)
                acc += (rows.at(i, a) - mean[static_cast<std::size_t>(a)]) *
                       (rows.at(i, b) - mean[static_cast<std::size_t>(b)]);
            cov.at(a, b) = acc / (m - 1);
        }
    EigResult oracle = sym_eig(cov);

    for (int c = 0; c < 7; ++c) {
        CHECK(model.explained_variances[static_cast<std::size_t>(c)] ==
              doctest::Approx(oracle.values[static_cast<std::size_t>(c)]).epsilon(1e-8));
        double dot = 0.0;
        for (int j = 0; j < d; ++j) dot += model.components.at(c, j) * oracle.vectors.at(j, c);
        CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("clamped pca shrinks to the rank the data supports") {
    SUBCASE("rank-1 data yields a single component") {
        // All points on the line t * (1, 2, -1): rank 1 regardless of M or d.
        Tensor rows({5, 3});
        for (int i = 0; i < 5; ++i) {
            rows.at(i, 0) = i * 1.0;
            rows.at(i, 1) = i * 2.0;
            rows.at(i, 2) = i * -1.0;
        }
        PcaModel m = pca_fit_clamped(rows, 3);
        REQUIRE(m.components.dim(0) == 1);
        double norm = std::sqrt(1.0 + 4.0 + 1.0);
        double dot = std::abs(m.components.at(0, 0) * (1 / norm) +
                              m.components.at(0, 1) * (2 / norm) +
                              m.components.at(0, 2) * (-1 / norm));
        CHECK(dot == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("full-rank data matches the strict fit exactly") {
        RandomStream rng(31);
        Tensor rows({9, 4});
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = rng.uniform_real(-1, 1);
        PcaModel strict = pca_fit(rows, 4);
        PcaModel clamped = pca_fit_clamped(rows, 4);
        REQUIRE(clamped.components.dim(0) == 4);
        for (std::size_t i = 0; i < strict.components.size(); ++i)
            CHECK(clamped.components[i] == strict.components[i]);
        for (int c = 0; c < 4; ++c)
            CHECK(clamped.explained_variances[static_cast<std::size_t>(c)] ==
                  strict.explained_variances[static_cast<std::size_t>(c)]);
    }
    SUBCASE("the sample-count ceiling still applies") {
        RandomStream rng(32);
        Tensor rows({4, 10});
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = rng.uniform_real(-1, 1);
        PcaModel m = pca_fit_clamped(rows, 100);
        CHECK(m.components.dim(0) == 3);  // M - 1
    }
    SUBCASE("wide rank-deficient data clamps where the strict fit fails") {
        // 8 samples in 8-d built from 4 directions: the M x M route would hit
        // zero-norm components at the strict count, the clamp stops before them.
        RandomStream rng(33);
        Tensor basis({4, 8});
        for (std::size_t i = 0; i < basis.size(); ++i) basis[i] = rng.uniform_real(-1, 1);
        Tensor rows({8, 8});
        for (int i = 0; i < 8; ++i)
            for (int b = 0; b < 4; ++b) {
                double w = rng.uniform_real(-2, 2);
                for (int j = 0; j < 8; ++j) rows.at(i, j) += w * basis.at(b, j);
            }
        CHECK_THROWS_AS(pca_fit(rows, 7), std::runtime_error);
        PcaModel m = pca_fit_clamped(rows, 7);
        CHECK(m.components.dim(0) == 4);
        for (int a = 0; a < m.components.dim(0); ++a)
            for (int b = 0; b < m.components.dim(0); ++b) {
                double dot = 0.0;
                for (int j = 0; j < 8; ++j) dot += m.components.at(a, j) * m.components.at(b, j);
                CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-8);
            }
    }
    SUBCASE("constant data is still an error") {
        Tensor rows({4, 3});
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = 2.5;
        CHECK_THROWS_AS(pca_fit_clamped(rows, 2), std::runtime_error);
        CHECK_THROWS_AS(pca_fit_clamped(Tensor({4, 3}), 0), std::invalid_argument);
    }
}

TEST_CASE("standardizer") {
    RandomStream rng(3);
    Tensor rows({30, 4});
    for (int i = 0; i < 30; ++i) {
        rows.at(i, 0) = rng.gaussian(5.0, 2.0);
        rows.at(i, 1) = rng.gaussian(-3.0, 0.5);
        rows.at(i, 2) = rng.uniform_real();
        rows.at(i, 3) = 7.0;  // constant column
    }
    Standardizer s = standardizer_fit(rows);
    Tensor t = standardizer_transform(s, rows);
    for (int j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (int i = 0; i < 30; ++i) mean += t.at(i, j);
        mean /= 30;
        double var = 0.0;
        for (int i = 0; i < 30; ++i) var += (t.at(i, j) - mean) * (t.at(i, j) - mean);
        var /= 30;
        CHECK(std::abs(mean) < 1e-12);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (int i = 0; i < 30; ++i) CHECK(t.at(i, 3) == 0.0);  // constant maps to zero
}

TEST_CASE("feature files round-trip") {
    EncoderModel enc = tiny_encoder(8, 8, 4);
    LabeledDataset ds = tiny_dataset(5, 8, 8, 8);
    FeatureMatrix fm = extract_features(enc, ds);
    fm.provenance.strategy = "seed";
    fm.provenance.dataset_id = "kyoto";

    auto path = (std::filesystem::temp_directory_path() / "stlfer_features.bin").string();
    save_features(fm, path);
    FeatureMatrix loaded = load_features(path);
    CHECK(bitwise_equal(loaded.rows, fm.rows));
    CHECK(loaded.labels == fm.labels);
    CHECK(loaded.subject_ids == fm.subject_ids);
    CHECK(loaded.class_names == fm.class_names);
    CHECK(loaded.provenance == fm.provenance);
    std::remove(path.c_str());
}
