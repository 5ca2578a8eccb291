#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "support/fixtures.hpp"
#include "termgraph/embed/embedder.hpp"
#include "termgraph/embed/embedding_service.hpp"
#include "termgraph/embed/vector.hpp"
#include "termgraph/error.hpp"
#include "termgraph/store/store.hpp"

namespace termgraph::embed {
namespace {

// Independent oracle in long double.
double oracle_cosine(const std::vector<double>& u, const std::vector<double>& v) {
  long double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<long double>(u[i]) * v[i];
    nu += static_cast<long double>(u[i]) * u[i];
    nv += static_cast<long double>(v[i]) * v[i];
  }
  return static_cast<double>(1.0L - dot / (std::sqrt(nu) * std::sqrt(nv)));
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g;
  std::vector<double> v(d);
  for (auto& x : v) x = g(rng);
  return v;
}

TEST(Cosine, Geometry) {
  std::vector<double> u{1, 2, 3}, anti{-2, -4, -6}, ortho{3, 0, -1};
  EXPECT_NEAR(cosine_distance(u, u), 0.0, 1e-12);
  EXPECT_NEAR(cosine_distance(u, anti), 2.0, 1e-12);
  EXPECT_NEAR(cosine_distance(u, ortho), 1.0, 1e-12);
}

TEST(Cosine, PropertiesOverRandomPairs) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int i = 0; i < 2000; ++i) {
    auto d = static_cast<std::size_t>(2 + i % 30);
    auto u = random_vector(rng, d), v = random_vector(rng, d);
    double duv = cosine_distance(u, v);
    EXPECT_GE(duv, 0.0);
    EXPECT_LE(duv, 2.0 + 1e-9);
    EXPECT_DOUBLE_EQ(duv, cosine_distance(v, u));
    EXPECT_NEAR(duv, oracle_cosine(u, v), 1e-12);
    auto su = u;
    double a = scale(rng);
    for (auto& x : su) x *= a;
    EXPECT_NEAR(cosine_distance(su, v), duv, 1e-12);
  }
}

TEST(Cosine, RejectsZeroAndMismatchedVectors) {
  std::vector<double> zero{0, 0}, u{1, 0}, w{1, 0, 0};
  try {
    cosine_distance(zero, u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroVector);
  }
  try {
    cosine_distance(u, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMixedVectors);
  }
}

TEST(Pooling, MeanAndMax) {
  std::vector<EmbeddingVector> vs{{{1, -2, 3}, "m", VectorKind::kCls, "a"},
                                  {{3, 4, -1}, "m", VectorKind::kCls, "b"}};
  auto mean = pool_vectors(vs, PoolMode::kMean, "o");
  EXPECT_EQ(mean.values, (std::vector<double>{2, 1, 1}));
  EXPECT_EQ(mean.kind, VectorKind::kSummary);
  auto mx = pool_vectors(vs, PoolMode::kMax);
  EXPECT_EQ(mx.values, (std::vector<double>{3, 4, 3}));
  vs.push_back({{1, 1, 1}, "other", VectorKind::kCls, "c"});
  EXPECT_THROW(pool_vectors(vs, PoolMode::kMean), Error);
}

TEST(FixtureEmbedder, DeterministicAndWordSensitive) {
  FixtureEmbedder a("m", 32), b("m", 32), seeded("m", 32, 5);
  auto x = a.embed("broken finger");
  EXPECT_EQ(x.cls, b.embed("broken finger").cls);
  EXPECT_NE(x.cls, seeded.embed("broken finger").cls);
  EXPECT_EQ(x.cls.size(), 32u);
  // Shared words bring strings closer.
  double near = cosine_distance(x.cls, a.embed("finger fracture").cls);
  double far = cosine_distance(x.cls, a.embed("iron deficiency anemia").cls);
  EXPECT_LT(near, far);
}

TEST(FixtureEmbedder, LookupFileOverridesHashing) {
  auto dir = testing::temp_dir("embed");
  {
    std::ofstream f(dir / "vectors.tsv");
    f << "UTI\tm\tCLS\t1,0,0\n";
    f << "UTI\tother\tCLS\t0,1,0\n";
  }
  auto e = FixtureEmbedder::from_file(dir / "vectors.tsv", "m", 3);
  EXPECT_EQ(e.embed("UTI").cls, (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(e.embed("UTI").mean_pooled.size(), 3u);
}

class CountingEmbedder : public Embedder {
 public:
  std::string model_id() const override { return inner.model_id(); }
  std::size_t dimension() const override { return inner.dimension(); }
  StringEmbedding embed(std::string_view text) override {
    ++calls;
    return inner.embed(text);
  }
  FixtureEmbedder inner{"count", 16};
  std::atomic<int> calls{0};
};

TEST(EmbeddingService, SecondEmbedHitsCache) {
  CountingEmbedder embedder;
  InMemoryVectorRepository repo;
  EmbeddingService service(embedder, repo);
  auto first = service.embed_string("heart failure");
  EXPECT_EQ(embedder.calls, 1);
  auto second = service.embed_string("heart failure");
  EXPECT_EQ(embedder.calls, 1);
  EXPECT_EQ(first.cls.values, second.cls.values);
  EXPECT_EQ(repo.size(), 3u);
}

TEST(EmbeddingService, CacheSurvivesAcrossServicesOnOneStore) {
  store::Store store(":memory:");
  CountingEmbedder embedder;
  {
    EmbeddingService s1(embedder, store);
    s1.embed_string("asthma");
  }
  EmbeddingService s2(embedder, store);
  ASSERT_TRUE(s2.cached_string_vectors("asthma"));
  s2.embed_string("asthma");
  EXPECT_EQ(embedder.calls, 1);
}

TEST(EmbeddingService, ConcurrentRequestsEmbedOnce) {
  CountingEmbedder embedder;
  InMemoryVectorRepository repo;
  EmbeddingService service(embedder, repo);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { service.embed_string("migraine"); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(embedder.calls, 1);
}

TEST(EmbeddingService, SummaryIsMeanOfClsAndPersistedOnce) {
  CountingEmbedder embedder;
  InMemoryVectorRepository repo;
  EmbeddingService service(embedder, repo);
  std::vector<std::string> texts{"CHF", "Congestive heart failure"};
  try {
    service.summary_vector(code_owner("icd", "I50"), texts);
    FAIL() << "strings must be embedded first";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDependencyMissing);
  }
  auto a = service.embed_string("CHF").cls.values;
  auto b = service.embed_string("Congestive heart failure").cls.values;
  auto summary = service.summary_vector(code_owner("icd", "I50"), texts);
  ASSERT_EQ(summary.values.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(summary.values[i], (a[i] + b[i]) / 2, 1e-15);
  EXPECT_EQ(summary.kind, VectorKind::kSummary);
  auto again = service.summary_vector(code_owner("icd", "I50"), texts);
  EXPECT_EQ(again.values, summary.values);
  EXPECT_EQ(embedder.calls, 2);
}

}  // namespace
}  // namespace termgraph::embed
