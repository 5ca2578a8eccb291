#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "support/fixtures.hpp"
#include "termgraph/embed/embedder.hpp"
#include "termgraph/error.hpp"
#include "termgraph/match/matcher.hpp"
#include "termgraph/store/code_filter.hpp"

namespace termgraph::match {
namespace {

using Vec = std::vector<double>;

double oracle_distance(const Vec& a, const Vec& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(1.0L - dot / (std::sqrt(na) * std::sqrt(nb)));
}

std::vector<store::RankedCode> oracle(const std::vector<Vec>& query, const std::vector<CodeVectors>& codes,
                                      double z, int n) {
  std::vector<store::RankedCode> all;
  for (const auto& c : codes) {
    if (c.vectors.empty()) continue;
    double best = 3;
    for (const auto& u : query)
      for (const auto& v : c.vectors) best = std::min(best, oracle_distance(u, v));
    if (best < z) all.push_back({c.code_id, best});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.code_id < b.code_id;
  });
  if (all.size() > static_cast<std::size_t>(n)) all.resize(n);
  return all;
}

Vec random_vector(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  Vec v(d);
  for (auto& x : v) x = g(rng);
  return v;
}

TEST(ExactIndex, AgreesWithBruteForceOracle) {
  std::mt19937_64 rng(7);
  for (int instance = 0; instance < 5; ++instance) {
    std::vector<CodeVectors> codes;
    for (int c = 0; c < 30; ++c) {
      CodeVectors cv{"C" + std::to_string(100 + c), {}};
      int k = static_cast<int>(rng() % 6);  // some codes have no vectors
      for (int i = 0; i < k; ++i) cv.vectors.push_back(random_vector(rng, 8));
      codes.push_back(cv);
    }
    // A duplicated vector forces an exact distance tie between two codes.
    if (!codes[3].vectors.empty()) codes[4].vectors.push_back(codes[3].vectors.front());
    ExactIndex index(codes);
    for (int q = 0; q < 10; ++q) {
      std::vector<Vec> query{random_vector(rng, 8)};
      if (q % 2) query.push_back(random_vector(rng, 8));
      if (q == 0 && !codes[3].vectors.empty()) query = {codes[3].vectors.front()};
      double z = std::uniform_real_distribution<double>(0.2, 2.0)(rng);
      int n = 1 + static_cast<int>(rng() % 6);
      auto got = index.search(query, z, n);
      auto want = oracle(query, codes, z, n);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].code_id, want[i].code_id);
        EXPECT_NEAR(got[i].distance, want[i].distance, 1e-9);
        EXPECT_LT(got[i].distance, z);
      }
    }
  }
}

TEST(ExactIndex, ThresholdIsStrict) {
  std::vector<CodeVectors> codes{{"A", {{1, 0}}}, {"B", {{0, 1}}}, {"C", {{-1, 0}}}};
  ExactIndex index(codes);
  std::vector<Vec> q{{1, 0}};
  EXPECT_TRUE(index.search(q, 0.0, 4).empty());
  auto r = index.search(q, 1.0, 4);  // B sits exactly at 1
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].code_id, "A");
  EXPECT_EQ(index.search(q, 2.0, 4).size(), 2u);  // C sits exactly at 2
  EXPECT_EQ(index.distance_computations(), 9);
}

class MatcherTest : public ::testing::Test {
 protected:
  store::Store st{":memory:"};
  embed::FixtureEmbedder embedder{"fixture", 3};
  embed::EmbeddingService svc{embedder, st};
  Matcher matcher{st, svc};
  store::Id code_set = 0;

  void SetUp() override {
    embedder.set_vector("alpha", embed::VectorKind::kCls, {1, 0, 0});
    embedder.set_vector("alpha two", embed::VectorKind::kCls, {1, 1, 0});
    embedder.set_vector("beta", embed::VectorKind::kCls, {0, 1, 0});
    embedder.set_vector("gamma", embed::VectorKind::kCls, {0, 0, 1});
    embedder.set_vector("query", embed::VectorKind::kCls, {1, 0.1, 0});
    std::vector<store::ImportRow> rows{{"A", "alpha", 0}, {"A", "alpha two", 1}, {"B", "beta", 0}, {"G", "gamma", 0}};
    auto t = st.import_terminology("t", rows).terminology.id;
    code_set = st.create_code_set(t, "all", store::CodeFilter::parse("all")).id;
  }
};

TEST_F(MatcherTest, RanksByClosestStringAndCachesResult) {
  MatchQuery q{"query", code_set, {}, 2.0, 4};
  auto r = matcher.match_string_to_codes(q);
  ASSERT_EQ(r.ranked.size(), 3u);
  EXPECT_EQ(r.ranked[0].code_id, "A");
  EXPECT_EQ(r.best, "A");
  EXPECT_FALSE(r.from_cache);
  EXPECT_NEAR(r.ranked[0].distance, oracle_distance({1, 0.1, 0}, {1, 0, 0}), 1e-12);
  auto computed = matcher.distance_computations();
  auto again = matcher.match_string_to_codes(q);
  EXPECT_TRUE(again.from_cache);
  EXPECT_EQ(again.ranked, r.ranked);
  EXPECT_EQ(matcher.distance_computations(), computed);

  q.n = 1;
  EXPECT_EQ(matcher.match_string_to_codes(q).ranked.size(), 1u);
  q.z = 0.5;
  q.n = 4;
  EXPECT_EQ(matcher.match_string_to_codes(q).ranked.size(), 1u);
}

TEST_F(MatcherTest, ValidatesArguments) {
  auto code_of = [&](MatchQuery q) {
    try {
      matcher.match_string_to_codes(q);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kStorageError;
  };
  EXPECT_EQ(code_of({"query", code_set, {}, 2.5, 4}), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of({"query", code_set, {}, -0.1, 4}), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of({"query", code_set, {}, 1, 0}), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of({"  ", code_set, {}, 1, 4}), ErrorCode::kInvalidArgument);
  auto empty = st.create_code_set(st.find_terminology("t")->id, "none", store::CodeFilter::parse("code_id = \"Z\""));
  EXPECT_EQ(code_of({"query", empty.id, {}, 1, 4}), ErrorCode::kEmptySet);
  VectorSelection summary_only;
  summary_only.object_kinds = {embed::VectorKind::kSummary};
  EXPECT_EQ(code_of({"query", code_set, summary_only, 1, 4}), ErrorCode::kDependencyMissing);
  EXPECT_THROW(parse_selection("", "CLS", false), Error);
  EXPECT_THROW(parse_selection("CLS", "bogus", false), Error);
  EXPECT_EQ(parse_selection("cls, mean_pooled", "CLS", true).describe(), "subject=CLS,MEAN_POOLED;object=CLS;expansions=1");
}

TEST_F(MatcherTest, ReviewExportListsRankedCodes) {
  matcher.match_string_to_codes({"query", code_set, {}, 2.0, 2});
  auto matches = st.all_matches();
  std::ostringstream out;
  write_review_export(out, st, matches);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "object\trank\tcode_id\tmain_string\tdistance");
  EXPECT_NE(out.str().find("query\t1\tA\talpha\t"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("query\t2\tB\tbeta\t"), std::string::npos) << out.str();
}

}  // namespace
}  // namespace termgraph::match
