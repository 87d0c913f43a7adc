#include "doctest.h"

#include "stlfer/classifiers.hpp"
#include "stlfer/random.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <vector>

using namespace stlfer;
using testing::bitwise_equal;

namespace {

struct Toy {
    Tensor x;
    std::vector<int> y;
};

/// Gaussian blobs, one per center, in order.
Toy make_clusters(const std::vector<std::pair<double, double>>& centers,
                  const std::vector<int>& counts, double sigma, std::uint64_t seed) {
    RandomStream rng(seed);
    int total = 0;
    for (int c : counts) total += c;
    Toy toy{Tensor({total, 2}), {}};
    int at = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (int i = 0; i < counts[c]; ++i) {
            toy.x.at(at, 0) = centers[c].first + rng.gaussian(0.0, sigma);
            toy.x.at(at, 1) = centers[c].second + rng.gaussian(0.0, sigma);
            toy.y.push_back(static_cast<int>(c));
            ++at;
        }
    }
    return toy;
}

double training_accuracy(const Classifier& model, const Toy& toy) {
    PosteriorMatrix p = model.predict_proba(toy.x);
    int correct = 0;
    for (int i = 0; i < toy.x.dim(0); ++i) {
        int arg = 0;
        for (int c = 1; c < static_cast<int>(p.classes.size()); ++c)
            if (p.rows.at(i, c) > p.rows.at(i, arg)) arg = c;
        if (p.classes[static_cast<std::size_t>(arg)] == toy.y[static_cast<std::size_t>(i)])
            ++correct;
    }
    return static_cast<double>(correct) / toy.x.dim(0);
}

void check_row_stochastic(const PosteriorMatrix& p) {
    for (int i = 0; i < p.rows.dim(0); ++i) {
        double sum = 0.0;
        for (int c = 0; c < p.rows.dim(1); ++c) {
            double v = p.rows.at(i, c);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

}  // namespace

TEST_CASE("linear svm") {
    Toy toy = make_clusters({{-2, -2}, {2, 2}}, {20, 20}, 0.5, 10);

    SUBCASE("separable two-class problem reaches full training accuracy") {
        SvmConfig cfg;
        cfg.C = 1.0;
        auto model = svm_train(toy.x, toy.y, cfg);
        CHECK(training_accuracy(*model, toy) == 1.0);
        check_row_stochastic(model->predict_proba(toy.x));
    }
    SUBCASE("far from the boundary the posterior is confident") {
        SvmConfig cfg;
        cfg.C = 1.0;
        auto model = svm_train(toy.x, toy.y, cfg);
        PosteriorMatrix p = model->predict_proba(toy.x);
        double max_conf = 0.0;
        for (int i = 0; i < p.rows.dim(0); ++i)
            for (int c = 0; c < p.rows.dim(1); ++c) max_conf = std::max(max_conf, p.rows.at(i, c));
        CHECK(max_conf > 0.9);
    }
    SUBCASE("balanced weights recover the minority class") {
        Toy skew = make_clusters({{-2, -2}, {2, 2}}, {90, 10}, 0.5, 11);
        SvmConfig cfg;
        cfg.C = 1.0;
        auto model = svm_train(skew.x, skew.y, cfg);
        PosteriorMatrix p = model->predict_proba(skew.x);
        int correct0 = 0, correct1 = 0;
        for (int i = 0; i < skew.x.dim(0); ++i) {
            int arg = p.rows.at(i, 0) >= p.rows.at(i, 1) ? 0 : 1;
            if (arg == skew.y[static_cast<std::size_t>(i)]) {
                (arg == 0 ? correct0 : correct1) += 1;
            }
        }
        CHECK(correct0 == 90);  // recall 1.0 for each class
        CHECK(correct1 == 10);
    }
    SUBCASE("three classes") {
        Toy three = make_clusters({{-3, 0}, {3, 0}, {0, 4}}, {15, 15, 15}, 0.4, 12);
        SvmConfig cfg;
        cfg.C = 1.0;
        auto model = svm_train(three.x, three.y, cfg);
        CHECK(training_accuracy(*model, three) >= 0.95);
        check_row_stochastic(model->predict_proba(three.x));
    }
    SUBCASE("single-class input is rejected") {
        Tensor x({4, 2});
        std::vector<int> y{1, 1, 1, 1};
        CHECK_THROWS_AS(svm_train(x, y), std::invalid_argument);
    }
    SUBCASE("training is deterministic in the seed") {
        SvmConfig cfg;
        cfg.C = 1.0;
        cfg.seed = 5;
        auto a = svm_train(toy.x, toy.y, cfg);
        auto b = svm_train(toy.x, toy.y, cfg);
        CHECK(bitwise_equal(a->predict_proba(toy.x).rows, b->predict_proba(toy.x).rows));
    }
}

TEST_CASE("decision tree") {
    SUBCASE("pure node is an immediate leaf") {
        Tensor x({3, 2}, {0, 0, 1, 1, 2, 2});
        std::vector<int> y{4, 4, 4};
        TreeClassifier tree = tree_train_value(x, y, {});
        CHECK(tree.depth() == 0);
        PosteriorMatrix p = tree.predict_proba(x);
        CHECK(p.classes == std::vector<int>{4});
        for (int i = 0; i < 3; ++i) CHECK(p.rows.at(i, 0) == 1.0);
    }
    SUBCASE("xor needs a zero-gain first split") {
        Tensor x({4, 2}, {0, 0, 1, 1, 0, 1, 1, 0});
        std::vector<int> y{0, 0, 1, 1};
        TreeConfig cfg;
        cfg.max_depth = 2;
        cfg.sqrt_features = false;
        TreeClassifier tree = tree_train_value(x, y, cfg);
        Toy toy{x, y};
        CHECK(training_accuracy(tree, toy) == 1.0);
    }
    SUBCASE("max_depth zero is rejected") {
        Tensor x({4, 2});
        std::vector<int> y{0, 1, 0, 1};
        TreeConfig cfg;
        cfg.max_depth = 0;
        CHECK_THROWS_AS(tree_train_value(x, y, cfg), std::invalid_argument);
    }
    SUBCASE("empty data is rejected") {
        CHECK_THROWS_AS(tree_train_value(Tensor({0, 2}), {}, {}), std::invalid_argument);
    }
    SUBCASE("depth never exceeds the limit") {
        RandomStream rng(3);
        for (int trial = 0; trial < 10; ++trial) {
            Tensor x({60, 5});
            std::vector<int> y;
            for (int i = 0; i < 60; ++i) {
                for (int j = 0; j < 5; ++j) x.at(i, j) = rng.uniform_real(-1, 1);
                y.push_back(rng.uniform_int(0, 2));
            }
            int limit = 1 + trial % 4;
            TreeConfig cfg;
            cfg.max_depth = limit;
            cfg.seed = static_cast<std::uint64_t>(trial);
            TreeClassifier tree = tree_train_value(x, y, cfg);
            CHECK(tree.depth() <= limit);
            check_row_stochastic(tree.predict_proba(x));
        }
    }
}

TEST_CASE("bagging") {
    Toy toy = make_clusters({{-2, -2}, {2, 2}}, {20, 20}, 0.5, 20);

    SUBCASE("single-estimator ensemble equals its member") {
        BaggingConfig cfg;
        cfg.n_estimators = 1;
        cfg.seed = 2;
        auto model = bagging_train(toy.x, toy.y, cfg);
        auto& bag = dynamic_cast<BaggingClassifier&>(*model);
        CHECK(bitwise_equal(bag.predict_proba(toy.x).rows, bag.member_proba(0, toy.x).rows));
    }
    SUBCASE("ensemble posterior is the mean of member posteriors") {
        BaggingConfig cfg;
        cfg.n_estimators = 5;
        cfg.seed = 3;
        auto model = bagging_train(toy.x, toy.y, cfg);
        auto& bag = dynamic_cast<BaggingClassifier&>(*model);
        PosteriorMatrix ensemble = bag.predict_proba(toy.x);
        Tensor acc(ensemble.rows.shape());
        for (int e = 0; e < 5; ++e) {
            PosteriorMatrix p = bag.member_proba(e, toy.x);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p.rows[i] / 5.0;
        }
        for (std::size_t i = 0; i < acc.size(); ++i)
            CHECK(std::abs(acc[i] - ensemble.rows[i]) < 1e-12);
        check_row_stochastic(ensemble);

        // Bootstrap resampling diversifies member structure: the root split
        // threshold shifts with the points a member happens to draw.
        bool any_member_differs = false;
        double t0 = bag.members()[0].nodes()[0].threshold;
        int f0 = bag.members()[0].nodes()[0].feature;
        for (int e = 1; e < 5 && !any_member_differs; ++e) {
            const auto& root = bag.members()[static_cast<std::size_t>(e)].nodes()[0];
            any_member_differs = root.threshold != t0 || root.feature != f0;
        }
        CHECK(any_member_differs);
    }
    SUBCASE("bad configs are rejected") {
        BaggingConfig cfg;
        cfg.n_estimators = 0;
        CHECK_THROWS_AS(bagging_train(toy.x, toy.y, cfg), std::invalid_argument);
        cfg.n_estimators = 3;
        cfg.sample_fraction = 0.0;
        CHECK_THROWS_AS(bagging_train(toy.x, toy.y, cfg), std::invalid_argument);
    }
    SUBCASE("deterministic in the seed") {
        BaggingConfig cfg;
        cfg.n_estimators = 7;
        cfg.seed = 9;
        auto a = bagging_train(toy.x, toy.y, cfg);
        auto b = bagging_train(toy.x, toy.y, cfg);
        CHECK(bitwise_equal(a->predict_proba(toy.x).rows, b->predict_proba(toy.x).rows));
    }
}

TEST_CASE("random forest") {
    Toy toy = make_clusters({{-2, -2}, {2, 2}}, {20, 20}, 0.5, 30);

    SUBCASE("oob score on separable data") {
        ForestConfig cfg;
        cfg.seed = 4;
        auto model = forest_train(toy.x, toy.y, cfg);
        auto& forest = dynamic_cast<ForestClassifier&>(*model);
        CHECK(forest.oob_score() >= 0.0);
        CHECK(forest.oob_score() <= 1.0);
        CHECK(forest.oob_score() > 0.9);
        check_row_stochastic(forest.predict_proba(toy.x));
    }
    SUBCASE("zero trees are rejected") {
        ForestConfig cfg;
        cfg.n_trees = 0;
        CHECK_THROWS_AS(forest_train(toy.x, toy.y, cfg), std::invalid_argument);
    }
}

TEST_CASE("logistic regression") {
    Toy toy = make_clusters({{-2, -2}, {2, 2}}, {20, 20}, 0.5, 40);

    SUBCASE("separable data reaches full training accuracy") {
        auto model = logreg_train(toy.x, toy.y);
        CHECK(training_accuracy(*model, toy) == 1.0);
        check_row_stochastic(model->predict_proba(toy.x));
    }
    SUBCASE("optimum satisfies the first-order condition") {
        auto model = logreg_train(toy.x, toy.y);
        auto& lr = dynamic_cast<LogRegClassifier&>(*model);
        double gnorm = logreg_gradient_norm(toy.x, toy.y, lr.classes(), lr.weights(), lr.bias(),
                                            1.0);
        CHECK(gnorm < 1e-5);
    }
    SUBCASE("constant features yield the class priors") {
        Tensor x = Tensor::full({20, 3}, 7.0);
        std::vector<int> y;
        for (int i = 0; i < 20; ++i) y.push_back(i < 15 ? 0 : 1);
        auto model = logreg_train(x, y);
        PosteriorMatrix p = model->predict_proba(x);
        for (int i = 0; i < 20; ++i) {
            CHECK(p.rows.at(i, 0) == doctest::Approx(0.75).epsilon(1e-4));
            CHECK(p.rows.at(i, 1) == doctest::Approx(0.25).epsilon(1e-4));
        }
    }
    SUBCASE("three-class problem") {
        Toy three = make_clusters({{-3, 0}, {3, 0}, {0, 4}}, {12, 12, 12}, 0.4, 41);
        auto model = logreg_train(three.x, three.y);
        CHECK(training_accuracy(*model, three) == 1.0);
    }
}

TEST_CASE("posterior expansion") {
    Tensor rows({2, 2}, {0.25, 0.75, 0.6, 0.4});
    PosteriorMatrix p{rows, {0, 2}};
    PosteriorMatrix wide = expand_posterior(p, {0, 1, 2});
    CHECK(wide.rows.shape() == std::vector<int>{2, 3});
    CHECK(wide.rows.at(0, 0) == 0.25);
    CHECK(wide.rows.at(0, 1) == 0.0);
    CHECK(wide.rows.at(0, 2) == 0.75);
    CHECK(wide.rows.at(1, 1) == 0.0);
    CHECK_THROWS_AS(expand_posterior(p, {0, 1}), std::invalid_argument);
}

TEST_CASE("classifier serialization round-trips") {
    Toy toy = make_clusters({{-2, -2}, {2, 2}}, {15, 15}, 0.5, 50);
    auto dir = std::filesystem::temp_directory_path();

    SvmConfig svm_cfg;
    svm_cfg.C = 1.0;
    BaggingConfig bag_cfg;
    bag_cfg.n_estimators = 4;
    ForestConfig forest_cfg;
    forest_cfg.n_trees = 4;

    std::vector<ClassifierPtr> models;
    models.push_back(svm_train(toy.x, toy.y, svm_cfg));
    models.push_back(tree_train(toy.x, toy.y, {}));
    models.push_back(bagging_train(toy.x, toy.y, bag_cfg));
    models.push_back(forest_train(toy.x, toy.y, forest_cfg));
    models.push_back(logreg_train(toy.x, toy.y));

    for (const auto& model : models) {
        auto path = (dir / ("stlfer_clf_" + model->kind() + ".bin")).string();
        model->save(path);
        ClassifierPtr loaded = load_classifier(path);
        CHECK(loaded->kind() == model->kind());
        CHECK(loaded->classes() == model->classes());
        CHECK(bitwise_equal(loaded->predict_proba(toy.x).rows,
                            model->predict_proba(toy.x).rows));
        std::remove(path.c_str());
    }

    auto& forest = dynamic_cast<ForestClassifier&>(*models[3]);
    auto path = (dir / "stlfer_clf_forest2.bin").string();
    forest.save(path);
    auto loaded = load_classifier(path);
    CHECK(dynamic_cast<ForestClassifier&>(*loaded).oob_score() == forest.oob_score());
    std::remove(path.c_str());
}
