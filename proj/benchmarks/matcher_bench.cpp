#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "termgraph/embed/embedder.hpp"
#include "termgraph/embed/embedding_service.hpp"
#include "termgraph/embed/vector.hpp"
#include "termgraph/match/matcher.hpp"
#include "termgraph/store/code_filter.hpp"
#include "termgraph/store/store.hpp"

namespace {

using namespace termgraph;

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g;
  std::vector<double> v(d);
  for (auto& x : v) x = g(rng);
  return v;
}

void BM_CosineDistance(benchmark::State& state) {
  std::mt19937_64 rng(1);
  auto d = static_cast<std::size_t>(state.range(0));
  auto u = random_vector(rng, d);
  auto v = random_vector(rng, d);
  for (auto _ : state) benchmark::DoNotOptimize(embed::cosine_distance(u, v));
}
BENCHMARK(BM_CosineDistance)->Arg(16)->Arg(384)->Arg(1024);

// Exhaustive search over codes x 5 vectors, d = 384.
void BM_ExactIndexSearch(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<match::CodeVectors> codes;
  for (int c = 0; c < state.range(0); ++c) {
    match::CodeVectors cv{"C" + std::to_string(c), {}};
    for (int k = 0; k < 5; ++k) cv.vectors.push_back(random_vector(rng, 384));
    codes.push_back(std::move(cv));
  }
  match::ExactIndex index(std::move(codes));
  std::vector<std::vector<double>> query{random_vector(rng, 384)};
  for (auto _ : state) benchmark::DoNotOptimize(index.search(query, 2.0, 4));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 5);
}
BENCHMARK(BM_ExactIndexSearch)->Arg(100)->Arg(1000)->Arg(10000);

// Full match path on an in-memory store; distinct strings defeat the result
// cache so every iteration searches.
void BM_MatchStringToCodes(benchmark::State& state) {
  store::Store st(":memory:");
  embed::FixtureEmbedder embedder("bench", 64);
  embed::EmbeddingService svc(embedder, st);
  match::Matcher matcher(st, svc);
  std::vector<store::ImportRow> rows;
  for (int c = 0; c < state.range(0); ++c)
    for (int s = 0; s < 3; ++s) rows.push_back({"C" + std::to_string(c), "code " + std::to_string(c) + " name " + std::to_string(s), s});
  auto t = st.import_terminology("bench", rows).terminology.id;
  auto cs = st.create_code_set(t, "all", store::CodeFilter::parse("all")).id;
  matcher.match_string_to_codes({"warm up", cs, {}, 2.0, 4});
  long i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(matcher.match_string_to_codes({"query " + std::to_string(i++), cs, {}, 2.0, 4}));
}
BENCHMARK(BM_MatchStringToCodes)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
