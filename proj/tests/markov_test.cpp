#include <array>
#include <cmath>

#include <gtest/gtest.h>

#include "pulltrack/markov.hpp"

namespace pulltrack {
namespace {

using Matrix2 = std::array<std::array<double, 2>, 2>;

Matrix2 multiply(const Matrix2& a, const Matrix2& b) {
    Matrix2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

// Oracle: explicit matrix power of the one-step kernel.
Matrix2 matrix_power(double p, int n) {
    const Matrix2 step{{{p, 1 - p}, {1 - p, p}}};
    Matrix2 out{{{1, 0}, {0, 1}}};
    for (int k = 0; k < n; ++k) out = multiply(out, step);
    return out;
}

TEST(Markov, OneStep) {
    EXPECT_DOUBLE_EQ(one_step_prob({0.7, 1}, 1, 1), 0.7);
    EXPECT_DOUBLE_EQ(one_step_prob({1.0, 1}, 0, 1), 0.0);
    EXPECT_DOUBLE_EQ(one_step_prob({0.5, 1}, 0, 1), 0.5);
    EXPECT_THROW((void)one_step_prob({0.5, 1}, 2, 1), std::invalid_argument);
}

TEST(Markov, NStepExamples) {
    const SourceModel m{0.7, 1};
    EXPECT_NEAR(n_step_prob(m, 1, 1, 2), 0.58, 1e-15);
    EXPECT_NEAR(matrix_power(0.7, 2)[1][1], 0.58, 1e-15);
    EXPECT_DOUBLE_EQ(n_step_prob(m, 1, 1, 1), one_step_prob(m, 1, 1));
    EXPECT_NEAR(n_step_prob({0.9, 1}, 0, 1, 500), 0.5, 1e-12);
    EXPECT_NEAR(n_step_prob({0.9, 1}, 1, 1, 500), 0.5, 1e-12);
    EXPECT_THROW((void)n_step_prob(m, 1, 1, 0), std::invalid_argument);
}

TEST(Markov, NStepRowsSumToOneAndMatchMatrixPower) {
    for (int k = 0; k <= 20; ++k) {
        const double p = k / 20.0;
        const SourceModel m{p, 1};
        Matrix2 power{{{1, 0}, {0, 1}}};
        const Matrix2 step{{{p, 1 - p}, {1 - p, p}}};
        for (int n = 1; n <= 200; ++n) {
            power = multiply(power, step);
            for (Bit from : {0, 1}) {
                EXPECT_NEAR(n_step_prob(m, from, 0, n) + n_step_prob(m, from, 1, n), 1.0, 1e-12);
                for (Bit to : {0, 1}) {
                    EXPECT_NEAR(n_step_prob(m, from, to, n), power[from][to], 1e-10) << "p=" << p << " n=" << n;
                    EXPECT_EQ(n_step_prob(m, from, to, n), n_step_prob(m, 1 - from, 1 - to, n));
                }
            }
        }
    }
}

TEST(Markov, SampleNextDegenerate) {
    Rng rng = make_stream(7, 0);
    for (int k = 0; k < 1000; ++k) {
        EXPECT_EQ(sample_next({1.0, 1}, 1, rng), 1);
        EXPECT_EQ(sample_next({0.0, 1}, 1, rng), 0);
    }
}

TEST(Markov, SampleNextFrequency) {
    Rng rng = make_stream(2024, 3);
    const SourceModel m{0.7, 1};
    int stays = 0;
    constexpr int draws = 1'000'000;
    for (int k = 0; k < draws; ++k) stays += sample_next(m, 0, rng) == 0;
    EXPECT_NEAR(static_cast<double>(stays) / draws, 0.7, 0.002);
}

TEST(Markov, StreamsAreReproducibleAndDistinct) {
    Rng a = make_stream(11, 0), b = make_stream(11, 0), c = make_stream(11, 1);
    for (int k = 0; k < 100; ++k) {
        const auto va = a();
        EXPECT_EQ(va, b());
        EXPECT_NE(va, c());
    }
}

TEST(Markov, Uniform01Range) {
    Rng rng = make_stream(5, 5);
    for (int k = 0; k < 10000; ++k) {
        const double u = uniform01(rng);
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

}  // namespace
}  // namespace pulltrack
