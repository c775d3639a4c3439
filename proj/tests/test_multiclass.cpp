#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace sblr;
using namespace sblr::testutil;

namespace {

/* Three Gaussian clusters with class-dependent mean shift. */
Dataset three_clusters(int perClass, int s, int t, std::uint64_t seed)
{
    NormalGenerator gen(seed);
    const double shifts[] = {-2.0, 0.0, 2.0};
    Dataset data;
    for (int cls = 1; cls <= 3; ++cls) {
        for (int i = 0; i < perClass; ++i) {
            data.samples.push_back(
                Matrix(random_matrix(s, t, gen).array() + shifts[cls - 1]));
            data.labels.push_back(cls);
        }
    }
    return data;
}

Dataset relabel_binary(const Dataset& data, int positiveClass)
{
    Dataset out = data;
    for (int& label : out.labels) {
        label = label == positiveClass ? 1 : -1;
    }
    return out;
}

}  // namespace

TEST(MulticlassTest, DistinctSortedClasses)
{
    Dataset data = random_instance(6, 2, 2, 3);
    data.labels = {3, 1, 2, 3, 1, 2};
    const std::vector<int> classes = distinct_sorted_classes(data);
    EXPECT_EQ(classes, (std::vector<int>{1, 2, 3}));
}

TEST(MulticlassTest, RelabelOneVsRest)
{
    Dataset data = random_instance(4, 2, 2, 5);
    data.labels = {1, 2, 3, 2};
    const Dataset out = relabel_one_vs_rest(data, 2);
    EXPECT_EQ(out.labels, (std::vector<int>{-1, 1, -1, 1}));
    EXPECT_EQ(out.samples[0], data.samples[0]);
}

TEST(MulticlassTest, OneVsAllRejectsMissingClassAndSingleClass)
{
    Dataset data = random_instance(6, 2, 2, 7);
    data.labels = {1, 1, 2, 2, 2, 1};
    SolverConfig config;
    config.reg.rank = 1;
    EXPECT_THROW(fit_one_vs_all(data, config, {1, 2, 3}), std::invalid_argument);

    for (int& label : data.labels) {
        label = 1;
    }
    EXPECT_THROW(fit_one_vs_all(data, config), std::invalid_argument);
}

TEST(MulticlassTest, OneVsAllTwoClassesAgreesWithBinaryFit)
{
    Dataset data = generate_synthetic(40, 4, 4, 1.0, RngSpec{9});
    for (int& label : data.labels) {
        label = label == 1 ? 1 : 2;   // class ids instead of signs
    }
    SolverConfig config;
    config.reg = RegConfig{0.05, 0.2, 0.05, 0.2, 1};

    const OneVsAllReport report = fit_one_vs_all(data, config);
    ASSERT_EQ(report.model.classes, (std::vector<int>{1, 2}));
    ASSERT_EQ(report.model.perClassParams.size(), 2u);

    const FitReport binary = fit(relabel_binary(data, 1), config);

    const Dataset test = generate_synthetic(60, 4, 4, 1.0, RngSpec{10});
    for (const Matrix& x : test.samples) {
        const double m1 = margin(report.model.perClassParams[0], x);
        const double m2 = margin(report.model.perClassParams[1], x);
        if ((m1 > 0.0) == (m2 > 0.0)) {
            continue;   // agreement is only promised where the margins disagree in sign
        }
        const int multiclassLabel = predict_multiclass(report.model, x).label;
        const int binaryLabel = predict(binary.params, x).label == 1 ? 1 : 2;
        EXPECT_EQ(multiclassLabel, binaryLabel);
    }
}

TEST(MulticlassTest, OneVsAllSeparatedClustersGeneralize)
{
    const Dataset train = three_clusters(20, 4, 4, 11);
    const Dataset test = three_clusters(30, 4, 4, 12);
    SolverConfig config;
    config.reg = RegConfig{0.05, 0.2, 0.05, 0.2, 1};

    const OneVsAllReport report = fit_one_vs_all(train, config);
    int correct = 0;
    for (int i = 0; i < test.n(); ++i) {
        correct += predict_multiclass(report.model, test.samples[i]).label == test.labels[i];
    }
    EXPECT_GE(static_cast<double>(correct) / test.n(), 0.95);
}

TEST(MulticlassTest, OneVsAllSinglePointPerClassRuns)
{
    NormalGenerator gen(13);
    Dataset data;
    data.samples = {random_matrix(3, 3, gen), random_matrix(3, 3, gen),
                    random_matrix(3, 3, gen)};
    data.labels = {1, 2, 3};
    SolverConfig config;
    config.reg.rank = 1;
    config.maxIter = 20;
    const OneVsAllReport report = fit_one_vs_all(data, config);
    EXPECT_EQ(report.model.perClassParams.size(), 3u);
    EXPECT_NO_THROW(predict_multiclass(report.model, data.samples[0]));
}

TEST(MulticlassTest, PredictBreaksTiesTowardLowestClass)
{
    MulticlassModel model;
    model.mode = MulticlassMode::OneVsAll;
    model.classes = {2, 5};
    const ModelParams block =
        make_model_params(Matrix::Ones(2, 1), Matrix::Ones(2, 1), 0.3);
    model.perClassParams = {block, block};
    const MulticlassPrediction pred = predict_multiclass(model, Matrix::Ones(2, 2));
    EXPECT_EQ(pred.label, 2);
}

TEST(MulticlassTest, MultinomialLossAtZeroIsLogClassCount)
{
    Dataset data = random_instance(9, 3, 2, 17);
    for (int i = 0; i < 9; ++i) {
        data.labels[i] = 1 + i % 3;
    }
    const std::vector<ModelParams> blocks(
        2, make_model_params(Matrix::Zero(3, 1), Matrix::Zero(2, 1), 0.0));
    EXPECT_NEAR(multinomial_loss(blocks, data), std::log(3.0), 1e-14);
}

TEST(MulticlassTest, MultinomialWithOneBlockEqualsBinaryLoss)
{
    for (std::uint64_t seed = 20; seed < 30; ++seed) {
        Dataset data = random_instance(8, 3, 3, seed);
        Dataset classData = data;
        for (int i = 0; i < 8; ++i) {
            classData.labels[i] = data.labels[i] == 1 ? 1 : 2;
        }
        const ModelParams p = random_params(3, 3, 1, seed + 30, 0.8);
        const double multinomial = multinomial_loss({p}, classData);
        EXPECT_NEAR(multinomial, loss(p, data), 1e-12);
    }
}

TEST(MulticlassTest, MultinomialLossMatchesNaiveFormula)
{
    Dataset data = random_instance(6, 2, 3, 31);
    for (int i = 0; i < 6; ++i) {
        data.labels[i] = 1 + i % 3;
    }
    const std::vector<ModelParams> blocks = {random_params(2, 3, 1, 33, 0.5),
                                             random_params(2, 3, 1, 34, 0.5)};
    double naive = 0.0;
    for (int i = 0; i < 6; ++i) {
        double denom = 1.0;
        double picked = 0.0;
        for (int c = 0; c < 2; ++c) {
            const double s = margin(blocks[c], data.samples[i]);
            denom += std::exp(s);
            if (data.labels[i] == c + 1) {
                picked = s;
            }
        }
        naive += std::log(denom) - picked;
    }
    naive /= 6.0;
    EXPECT_NEAR(multinomial_loss(blocks, data), naive, 1e-12);
}

TEST(MulticlassTest, MultinomialLossRejectsOutOfRangeLabels)
{
    Dataset data = random_instance(4, 2, 2, 35);
    data.labels = {1, 2, 3, 4};   // only two blocks -> classes up to 3
    const std::vector<ModelParams> blocks(
        2, make_model_params(Matrix::Zero(2, 1), Matrix::Zero(2, 1), 0.0));
    EXPECT_THROW(multinomial_loss(blocks, data), std::invalid_argument);
}

TEST(MulticlassTest, MultinomialGradientsAtZeroGiveClassFrequencies)
{
    Dataset data = random_instance(12, 2, 2, 37);
    for (int i = 0; i < 12; ++i) {
        data.labels[i] = 1 + i % 3;   // exactly balanced
    }
    const std::vector<ModelParams> blocks(
        2, make_model_params(Matrix::Zero(2, 1), Matrix::Zero(2, 1), 0.0));
    const MultinomialGradient g = multinomial_gradients(blocks, data);
    for (int c = 0; c < 2; ++c) {
        EXPECT_NEAR(g.gb(c), 0.0, 1e-15);
        EXPECT_TRUE(g.gU[c].isZero(0.0));
    }

    Dataset skewed = data;
    skewed.labels = {1, 1, 1, 1, 1, 1, 2, 2, 3, 3, 3, 3};
    const MultinomialGradient gSkewed = multinomial_gradients(blocks, skewed);
    EXPECT_NEAR(gSkewed.gb(0), 1.0 / 3.0 - 6.0 / 12.0, 1e-14);
    EXPECT_NEAR(gSkewed.gb(1), 1.0 / 3.0 - 2.0 / 12.0, 1e-14);
}

TEST(MulticlassTest, MultinomialGradientsMatchFiniteDifferences)
{
    Dataset data = random_instance(6, 3, 2, 41);
    for (int i = 0; i < 6; ++i) {
        data.labels[i] = 1 + i % 3;
    }
    std::vector<ModelParams> blocks = {random_params(3, 2, 1, 43, 0.6),
                                       random_params(3, 2, 1, 44, 0.6)};
    const MultinomialGradient g = multinomial_gradients(blocks, data);

    const double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
        for (Eigen::Index j = 0; j < blocks[c].U.size(); ++j) {
            auto bump = blocks;
            bump[c].U(j) += h;
            const double up = multinomial_loss(bump, data);
            bump[c].U(j) -= 2.0 * h;
            const double down = multinomial_loss(bump, data);
            EXPECT_LT(rel_err((up - down) / (2.0 * h), g.gU[c](j)), 1e-5);
        }
        for (Eigen::Index j = 0; j < blocks[c].V.size(); ++j) {
            auto bump = blocks;
            bump[c].V(j) += h;
            const double up = multinomial_loss(bump, data);
            bump[c].V(j) -= 2.0 * h;
            const double down = multinomial_loss(bump, data);
            EXPECT_LT(rel_err((up - down) / (2.0 * h), g.gV[c](j)), 1e-5);
        }
        auto bump = blocks;
        bump[c].b += h;
        const double up = multinomial_loss(bump, data);
        bump[c].b -= 2.0 * h;
        const double down = multinomial_loss(bump, data);
        EXPECT_LT(rel_err((up - down) / (2.0 * h), g.gb(c)), 1e-5);
    }
}

TEST(MulticlassTest, MultinomialProbabilitiesSumToOne)
{
    Dataset data = random_instance(5, 2, 2, 47);
    for (int i = 0; i < 5; ++i) {
        data.labels[i] = 1 + i % 3;
    }
    const std::vector<ModelParams> blocks = {random_params(2, 2, 1, 49, 1.5),
                                             random_params(2, 2, 1, 50, 1.5)};
    const Matrix margins = detail::multinomial_margins(blocks, data);
    for (int i = 0; i < 5; ++i) {
        // the pinned class's mass, from the raw margins
        double total = 1.0 / (1.0 + std::exp(margins(i, 0)) + std::exp(margins(i, 1)));
        for (int c = 0; c <= 1; ++c) {
            total += detail::softmax_prob(margins, i, c);
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(MulticlassTest, FitMultinomialValidatesLabelCoverage)
{
    Dataset data = random_instance(6, 2, 2, 51);
    data.labels = {1, 1, 3, 3, 1, 3};   // class 2 missing
    SolverConfig config;
    config.reg.rank = 1;
    EXPECT_THROW(fit_multinomial(data, config), std::invalid_argument);

    data.labels = {1, 1, 1, 1, 1, 1};
    EXPECT_THROW(fit_multinomial(data, config), std::invalid_argument);
}

TEST(MulticlassTest, FitMultinomialTwoClassObjectiveNearBinaryFit)
{
    Dataset data = generate_synthetic(30, 4, 4, 1.0, RngSpec{53});
    Dataset classData = data;
    for (int& label : classData.labels) {
        label = label == 1 ? 1 : 2;
    }
    SolverConfig config;
    config.reg = RegConfig{0.05, 0.3, 0.05, 0.3, 1};
    config.tol = 1e-5;

    const MulticlassFitReport multi = fit_multinomial(classData, config);
    const FitReport binary = fit(data, config);
    EXPECT_NEAR(multi.trace.back().objective, binary.trace.back().objective, 1e-4);
}

TEST(MulticlassTest, FitMultinomialMonotoneAndAccurateOnClusters)
{
    const Dataset train = three_clusters(15, 4, 4, 55);
    SolverConfig config;
    config.reg = RegConfig{0.05, 0.2, 0.05, 0.2, 1};

    const MulticlassFitReport report = fit_multinomial(train, config);
    for (std::size_t i = 1; i < report.trace.size(); ++i) {
        EXPECT_LE(report.trace[i].objective, report.trace[i - 1].objective + 1e-12);
    }
    int correct = 0;
    for (int i = 0; i < train.n(); ++i) {
        correct += predict_multiclass(report.model, train.samples[i]).label == train.labels[i];
    }
    EXPECT_GE(static_cast<double>(correct) / train.n(), 0.95);

    // multinomial stores one block fewer than it has classes
    EXPECT_EQ(report.model.classes.size(), 3u);
    EXPECT_EQ(report.model.perClassParams.size(), 2u);
}

TEST(MulticlassTest, FitMultinomialZeroIterationsGivesInitOnlyReport)
{
    Dataset data = random_instance(6, 3, 3, 57);
    for (int i = 0; i < 6; ++i) {
        data.labels[i] = 1 + i % 2;
    }
    SolverConfig config;
    config.reg.rank = 1;
    config.maxIter = 0;
    const MulticlassFitReport report = fit_multinomial(data, config);
    EXPECT_EQ(report.trace.size(), 1u);
    EXPECT_EQ(report.totalIters, 0);
}

TEST(MulticlassTest, MulticlassPredictionProbabilitiesAreCalibratedPerMode)
{
    const Dataset train = three_clusters(10, 3, 3, 59);
    SolverConfig config;
    config.reg = RegConfig{0.1, 0.3, 0.1, 0.3, 1};
    config.maxIter = 60;

    const MulticlassFitReport multi = fit_multinomial(train, config);
    const MulticlassPrediction pred = predict_multiclass(multi.model, train.samples[0]);
    EXPECT_GT(pred.probability, 0.0);
    EXPECT_LE(pred.probability, 1.0);
    EXPECT_EQ(pred.label, 1);
}
