#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "iae/error.hpp"
#include "iae/synthetic.hpp"
#include "test_util.hpp"

namespace iae {
namespace {

GenConfig small_gen(double bias, std::uint64_t seed = 1, std::size_t samples = 4000) {
  GenConfig c;
  c.samples = samples;
  c.bias = bias;
  c.seed = seed;
  return c;
}

// Pearson chi-square statistic of the contingency table between the quartile
// bin of `feature` and the treatment.
double chi_square(const std::vector<double>& feature, const std::vector<int>& t, int n) {
  std::vector<double> sorted = feature;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t N = feature.size();
  const double q1 = sorted[N / 4], q2 = sorted[N / 2], q3 = sorted[3 * N / 4];
  std::vector<std::vector<double>> table(4, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < N; ++i) {
    const int bin = feature[i] < q1 ? 0 : feature[i] < q2 ? 1 : feature[i] < q3 ? 2 : 3;
    table[bin][t[i] - 1] += 1.0;
  }
  std::vector<double> row(4, 0.0), col(n, 0.0);
  for (int b = 0; b < 4; ++b) {
    for (int j = 0; j < n; ++j) {
      row[b] += table[b][j];
      col[j] += table[b][j];
    }
  }
  double chi = 0.0;
  for (int b = 0; b < 4; ++b) {
    for (int j = 0; j < n; ++j) {
      const double e = row[b] * col[j] / N;
      if (e > 0) chi += (table[b][j] - e) * (table[b][j] - e) / e;
    }
  }
  return chi;
}

TEST(GenConfigTest, Validation) {
  GenConfig c;
  EXPECT_NO_THROW(c.validate());
  c.treatments = 1;
  EXPECT_THROW(c.validate(), InputError);
  c = GenConfig{};
  c.samples = 49;  // below 10 n
  EXPECT_THROW(c.validate(), InputError);
  c = GenConfig{};
  c.bias = -1;
  EXPECT_THROW(c.validate(), InputError);
  c = GenConfig{};
  c.noise = -0.1;
  EXPECT_THROW(c.validate(), InputError);
  c = GenConfig{};
  c.lift_min = 3;
  c.lift_max = 2;
  EXPECT_THROW(c.validate(), InputError);
  EXPECT_EQ(GenConfig::from_json(GenConfig{}.to_json()).to_json(), GenConfig{}.to_json());
}

TEST(GroundTruthTest, SaturationCurveIsZeroAtOriginNondecreasingConcave) {
  for (std::size_t n : {2u, 3u, 5u, 9u}) {
    GenConfig c = small_gen(1.0);
    c.treatments = n;
    const GroundTruth gt = GroundTruth::draw(c);
    EXPECT_EQ(gt.saturation(0), 0.0);
    EXPECT_DOUBLE_EQ(gt.saturation(n - 1), 1.0);
    for (std::size_t k = 1; k < n; ++k) {
      EXPECT_GE(gt.saturation(k), gt.saturation(k - 1));
      if (k + 1 < n) {
        EXPECT_LE(gt.saturation(k + 1) - gt.saturation(k), gt.saturation(k) - gt.saturation(k - 1));
      }
    }
  }
}

TEST(GroundTruthTest, MeanOutcomeFormulaAndTrueIae) {
  const GenConfig c = small_gen(1.0);
  const GroundTruth gt = GroundTruth::draw(c);
  ContextSampler sampler(c.schema, 2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> x = sampler.next();
    const double base = gt.base(x), lift = gt.lift(x);
    EXPECT_GE(lift, c.lift_min);
    EXPECT_LE(lift, c.lift_max);
    for (int i = 1; i <= 5; ++i) {
      EXPECT_DOUBLE_EQ(gt.mean_outcome(x, i), base + lift * gt.saturation(i - 1));
      EXPECT_GE(gt.mean_outcome(x, i), 0.0);
      EXPECT_EQ(gt.true_iae(x, i, i), 0.0);
      for (int j = 1; j <= 5; ++j) {
        EXPECT_DOUBLE_EQ(gt.true_iae(x, i, j), gt.mean_outcome(x, j) - gt.mean_outcome(x, i));
        EXPECT_NEAR(gt.true_iae(x, i, j), -gt.true_iae(x, j, i), 1e-12);
        for (int k = 1; k <= 5; ++k) {
          EXPECT_NEAR(gt.true_iae(x, i, j) + gt.true_iae(x, j, k), gt.true_iae(x, i, k), 1e-12);
          // Monotone in the target treatment.
          if (j <= k) {
            EXPECT_LE(gt.true_iae(x, i, j), gt.true_iae(x, i, k) + 1e-12);
          }
        }
      }
    }
    // alpha_13 = lift * (g(2) - g(0)).
    EXPECT_DOUBLE_EQ(gt.true_iae(x, 1, 3), lift * (gt.saturation(2) - gt.saturation(0)));
  }
  EXPECT_THROW(gt.mean_outcome(std::vector<double>(3, 0.0), 1), InputError);
}

TEST(GroundTruthTest, PositivityBound) {
  for (double b : {0.0, 1.0, 5.0, 20.0}) {
    const GenConfig c = small_gen(b);
    const GroundTruth gt = GroundTruth::draw(c);
    ContextSampler sampler(c.schema, 3);
    for (int trial = 0; trial < 200; ++trial) {
      const std::vector<double> x = sampler.next();
      const std::vector<double> p = gt.assignment_probabilities(x, b);
      double sum = 0.0;
      for (double v : p) {
        EXPECT_GE(v, std::exp(-b) / 5.0);
        sum += v;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(GroundTruthTest, JsonRoundTrip) {
  const GroundTruth gt = GroundTruth::draw(small_gen(2.0));
  EXPECT_TRUE(GroundTruth::from_json(gt.to_json()) == gt);
}

TEST(GenerateTest, UnbiasedAssignmentIsUniform) {
  const Generated g = generate(small_gen(0.0, 4, 20000));
  const double expected = 20000.0 / 5;
  const double sd = std::sqrt(20000.0 * 0.2 * 0.8);
  for (int j = 1; j <= 5; ++j) EXPECT_LT(std::abs(g.data.count(j) - expected), 3 * sd);
}

TEST(GenerateTest, ZeroNoiseGivesExactMeans) {
  GenConfig c = small_gen(1.0, 5, 500);
  c.noise = 0.0;
  const Generated g = generate(c);
  for (const Sample& s : g.data.samples()) EXPECT_EQ(s.y, g.truth.mean_outcome(s.x, s.t));
}

TEST(GenerateTest, StrongBiasCreatesDependence) {
  auto statistic = [](double b) {
    const Generated g = generate(small_gen(b, 6, 8000));
    std::vector<double> feature;
    std::vector<int> t;
    for (const Sample& s : g.data.samples()) {
      feature.push_back(g.truth.lift(s.x));
      t.push_back(s.t);
    }
    return chi_square(feature, t, 5);
  };
  EXPECT_GT(statistic(5.0), statistic(0.0));
  // 12 degrees of freedom: the 0.999 quantile is about 32.9.
  EXPECT_GT(statistic(5.0), 32.9);
}

TEST(GenerateTest, SameSeedIsBitIdenticalAndClippingRare) {
  const Generated a = generate(small_gen(1.0, 7));
  const Generated b = generate(small_gen(1.0, 7));
  ASSERT_EQ(a.data.size(), b.data.size());
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    EXPECT_EQ(a.data[i].x, b.data[i].x);
    EXPECT_EQ(a.data[i].y, b.data[i].y);
    EXPECT_EQ(a.data[i].t, b.data[i].t);
    clipped += a.data[i].y == 0.0;
  }
  EXPECT_LT(clipped, a.data.size() / 100);
  EXPECT_TRUE(a.truth == b.truth);
  const Generated c = generate(small_gen(1.0, 8));
  EXPECT_NE(a.data[0].x, c.data[0].x);
}

TEST(GenerateTest, ContextsFollowSchema) {
  const GenConfig c = small_gen(1.0);
  const FeatureSchema& s = c.schema;
  const Generated g = generate(c);
  for (const Sample& smp : g.data.samples()) {
    std::size_t off = 0;
    for (const FeatureGroup& grp : s.groups) {
      if (grp.kind == FeatureKind::kOneHot) {
        double sum = 0.0;
        for (std::size_t k = 0; k < grp.dim; ++k) {
          const double v = smp.x[off + k];
          EXPECT_TRUE(v == 0.0 || v == 1.0);
          sum += v;
        }
        EXPECT_EQ(sum, 1.0);
      }
      for (std::size_t lc : grp.log_columns) {
        EXPECT_GE(smp.x[off + lc], std::log1p(1.0) - 1e-12);
        EXPECT_LE(smp.x[off + lc], std::log1p(100.0) + 1e-12);
      }
      if (grp.name.rfind("pv_", 0) == 0) {
        for (std::size_t k = 0; k < grp.dim; ++k) EXPECT_GT(smp.x[off + k], 0.0);
      }
      off += grp.dim;
    }
  }
}

TEST(GenerateTest, GroundTruthTravelsWithDataset) {
  const Generated g = generate(small_gen(1.0, 9, 200));
  EXPECT_TRUE(ground_truth_of(g.data) == g.truth);
  Dataset bare(2, 1, {{{0.0}, 1, 1.0}, {{1.0}, 2, 2.0}});
  try {
    ground_truth_of(bare);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("PEHE requires ground truth"), std::string::npos);
  }
}

TEST(GenerateTest, EvaluationContextsAreIndependentAndSeeded) {
  const GenConfig c = small_gen(1.0, 10, 200);
  const Tensor a = evaluation_contexts(c, 50);
  EXPECT_EQ(a, evaluation_contexts(c, 50));
  EXPECT_EQ(a.rows(), 50u);
  const Generated g = generate(c);
  EXPECT_NE(std::vector<double>(a.row_span(0).begin(), a.row_span(0).end()), g.data[0].x);
}

TEST(OracleModelTest, PredictsTrueMeansAndRoundTrips) {
  const Generated g = generate(small_gen(1.0, 11, 200));
  const OracleModel oracle(g.truth);
  testing::TempDir dir("oracle");
  oracle.save(dir.path());
  const auto loaded = load_outcome_model(dir.path());
  for (const Sample& s : g.data.samples()) {
    for (int t = 1; t <= 5; ++t) {
      EXPECT_EQ(oracle.predict(s.x, t), g.truth.mean_outcome(s.x, t));
      EXPECT_EQ(loaded->predict(s.x, t), oracle.predict(s.x, t));
    }
  }
}

}  // namespace
}  // namespace iae
