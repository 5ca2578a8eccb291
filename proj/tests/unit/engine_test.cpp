#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "support/fixtures.hpp"
#include "termgraph/error.hpp"
#include "termgraph/extract/engine.hpp"
#include "termgraph/llm/cost_ledger.hpp"

namespace termgraph {
namespace {

using store::RunStatus;
using testing::ScriptedProvider;

struct DemoWorkspace {
  testing::DemoFiles files;
  ScriptedProvider* provider = nullptr;
  std::unique_ptr<service::Workspace> ws;

  explicit DemoWorkspace(ScriptedProvider::Script script = testing::demo_answer) {
    files = testing::write_demo_inputs(testing::temp_dir("engine"));
    auto p = std::make_unique<ScriptedProvider>(std::move(script), "replay");
    provider = p.get();
    ws = std::make_unique<service::Workspace>(testing::demo_settings(files, ":memory:"), std::move(p),
                                              nullptr);
  }
  void load() {
    ws->import_terminology(testing::kConditions, store::read_delimited_file(files.conditions));
    ws->create_code_set(testing::kConditions, testing::kConditionSet, "all", std::nullopt);
  }
  extract::RunConfig config() { return extract::load_run_config(files.run_config.string()); }
};

std::map<std::string, std::set<std::string>> objects_by_subject(const std::vector<store::Triple>& ts,
                                                                const std::string& predicate) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& t : ts)
    if (t.predicate == predicate) out[t.subject_code_id].insert(t.object_value);
  return out;
}

TEST(Engine, DemoRunWritesExpectedTriples) {
  DemoWorkspace demo;
  demo.load();
  auto report = demo.ws->run(demo.config());
  ASSERT_EQ(report.status, RunStatus::kCompleted) << report.error;
  auto triples = demo.ws->store().triples_for_run(report.run_id);
  EXPECT_EQ(triples.size(), report.triples_written);

  auto treated = objects_by_subject(triples, "may be treated with");
  EXPECT_EQ(treated["C01"], (std::set<std::string>{"nitrofurantoin", "trimethoprim-sulfamethoxazole",
                                                   "phenazopyridine"}));
  EXPECT_EQ(treated["C02"], (std::set<std::string>{"cephalexin", "clindamycin", "incision and drainage"}));
  EXPECT_EQ(treated["C08"], (std::set<std::string>{"finger splint", "ibuprofen", "naproxen"}));

  auto severity = objects_by_subject(triples, "has typical severity");
  EXPECT_EQ(severity["C06"], std::set<std::string>{"moderate"});  // b, (unmapped), b
  EXPECT_EQ(severity["C09"], std::set<std::string>{"severe"});
  auto chronic = objects_by_subject(triples, "is chronic");
  EXPECT_EQ(chronic["C02"], std::set<std::string>{"0"});  // no, no, yes
  EXPECT_EQ(chronic["C05"], std::set<std::string>{"1"});  // yes, yes, no
  auto onset = objects_by_subject(triples, "has typical onset age");
  EXPECT_EQ(onset["C01"], std::set<std::string>{"31"});  // (30 + 35 + 28) / 3
  EXPECT_EQ(onset["C06"], std::set<std::string>{"21"});  // (20 + 25 + 18) / 3
}

TEST(Engine, NoWriteElementsAndUnmappedKeysLeaveNoTriples) {
  DemoWorkspace demo;
  demo.load();
  auto report = demo.ws->run(demo.config());
  ASSERT_EQ(report.status, RunStatus::kCompleted);
  EXPECT_EQ(report.key_unmapped, 1u);
  for (const auto& t : demo.ws->store().all_triples()) {
    EXPECT_EQ(t.object_value.find("Typical course"), std::string::npos) << t.object_value;
    EXPECT_NE(t.object_value, "d");
  }
  auto json = nlohmann::json::parse(report.to_json());
  EXPECT_EQ(json["key_unmapped"], 1);
}

TEST(Engine, StoredObjectsMeetBeceptivityAndChainsResolve) {
  DemoWorkspace demo;
  demo.load();
  auto cfg = demo.config();
  auto report = demo.ws->run(cfg);
  ASSERT_EQ(report.status, RunStatus::kCompleted);
  auto& st = demo.ws->store();

  std::map<std::pair<std::string, std::string>, double> assessed;
  for (const auto& a : st.assessments_for_run(report.run_id))
    if (a.value) assessed[{a.subject_code_id, a.text}] = *a.value;
  const auto& b = cfg.groups.front().specs.front().beceptivity;
  for (const auto& t : st.triples_for_run(report.run_id)) {
    if (t.predicate != "may be treated with") continue;
    auto it = assessed.find({t.subject_code_id, t.object_value});
    ASSERT_NE(it, assessed.end()) << t.object_value;
    EXPECT_GE(it->second, b.min_required) << t.object_value;
  }

  // Walk every replaced_parent back to an original answer.
  std::map<std::pair<std::string, std::string>, std::pair<std::string, int>> parent_of;
  for (const auto& r : st.refinements_for_run(report.run_id))
    parent_of[{r.subject_code_id, r.child}] = {r.parent, r.depth};
  for (const auto& t : st.triples_for_run(report.run_id)) {
    if (!t.replaced_parent) continue;
    std::string node = t.object_value;
    int steps = 0;
    while (parent_of.count({t.subject_code_id, node})) {
      auto [parent, depth] = parent_of[{t.subject_code_id, node}];
      EXPECT_LE(depth, b.max_refinement_depth);
      node = parent;
      ASSERT_LE(++steps, b.max_refinement_depth);
    }
    EXPECT_GE(steps, 1);
  }
  auto naproxen = parent_of.find({"C08", "naproxen"});
  ASSERT_NE(naproxen, parent_of.end());
  EXPECT_EQ(naproxen->second, (std::pair<std::string, int>{"NSAIDs", 2}));
}

TEST(Engine, SecondExpansionAndAssessmentAreCached) {
  DemoWorkspace demo;
  auto& gw = demo.ws->gateway();
  extract::Extractor ex(demo.ws->store(), gw, demo.ws->embeddings());
  llm::CostLedger ledger({}, std::nullopt);

  auto first = ex.expand_string("nitrofurantoin", testing::kExpansionStyle, ledger);
  EXPECT_FALSE(first.from_cache);
  EXPECT_EQ(first.generated_texts.size(), 2u);
  auto calls = demo.provider->calls();
  auto embeds = demo.ws->embeddings().embedder_calls();
  auto second = ex.expand_string("nitrofurantoin", testing::kExpansionStyle, ledger);
  EXPECT_TRUE(second.from_cache);
  EXPECT_EQ(second.generated_texts, first.generated_texts);
  EXPECT_EQ(demo.provider->calls(), calls);
  EXPECT_EQ(demo.ws->embeddings().embedder_calls(), embeds);

  extract::BeceptivityConfig requery{extract::BeceptivityMethod::kRequery, 6, 10, 2, ""};
  auto a = ex.assess_beceptivity("antibiotics", std::nullopt, requery, ledger);
  EXPECT_EQ(a.value, 3);
  calls = demo.provider->calls();
  auto again = ex.assess_beceptivity("antibiotics", std::nullopt, requery, ledger);
  EXPECT_TRUE(again.from_cache);
  EXPECT_EQ(again.value, 3);
  EXPECT_EQ(demo.provider->calls(), calls);

  EXPECT_THROW(ex.expand_string("x", "no-such-style", ledger), Error);
}

TEST(Engine, DbLookupUsesHierarchyDepth) {
  DemoWorkspace demo;
  std::ifstream h(demo.files.hierarchy);
  demo.ws->import_hierarchy("drugs", store::read_hierarchy(h));
  extract::Extractor ex(demo.ws->store(), demo.ws->gateway(), demo.ws->embeddings());
  llm::CostLedger ledger({}, std::nullopt);
  extract::BeceptivityConfig db{extract::BeceptivityMethod::kDbLookup, 6, 10, 2, "drugs"};
  // Depth 3 of max depth 3 is fully specific; depth 2 is two thirds of it.
  EXPECT_DOUBLE_EQ(ex.assess_beceptivity("nitrofurantoin", std::nullopt, db, ledger).value, 10);
  EXPECT_NEAR(ex.assess_beceptivity("antibiotic", std::nullopt, db, ledger).value, 20.0 / 3, 1e-12);
  EXPECT_THROW(ex.assess_beceptivity("aspirin", std::nullopt, db, ledger), Error);
  EXPECT_EQ(demo.provider->calls(), 0);
}

// Budget oracle: the provider itself tracks the cost of everything it has
// answered and flags any request that arrives after that total passed the
// limit.
TEST(Engine, BudgetKillStopsDispatch) {
  const auto limit = llm::Money::parse("0.002");
  const llm::Pricing pricing{llm::Money::parse("0.000001"), llm::Money::parse("0.000002")};
  llm::Money spent;
  llm::Money max_response;
  int calls_after_kill = 0;
  auto script = [&](const std::string& prompt, int sample) {
    if (spent > limit) ++calls_after_kill;
    auto text = testing::demo_answer(prompt, sample);
    auto usage = ScriptedProvider::usage_for(prompt, text);
    auto cost = pricing.per_prompt_token.times(usage.prompt_tokens) +
                pricing.per_completion_token.times(usage.completion_tokens);
    spent = spent + cost;
    if (cost > max_response) max_response = cost;
    return text;
  };
  DemoWorkspace demo(script);
  demo.load();
  auto cfg = demo.config();
  cfg.budget = limit;
  cfg.pricing = pricing;
  auto report = demo.ws->run(cfg);
  EXPECT_EQ(report.status, RunStatus::kKilledBudget);
  EXPECT_TRUE(report.kill_triggered);
  EXPECT_EQ(calls_after_kill, 0);
  EXPECT_EQ(report.cost, spent);
  EXPECT_LT(report.cost, limit + max_response);
  EXPECT_GT(report.cost, limit);
  EXPECT_EQ(report.provider_calls, demo.provider->calls());
  EXPECT_EQ(demo.ws->store().get_run(report.run_id).status, RunStatus::kKilledBudget);
  // Whatever was written before the kill stays.
  EXPECT_EQ(demo.ws->store().triples_for_run(report.run_id).size(), report.triples_written);
}

TEST(Engine, ProviderFailuresMarkItemsFailed) {
  DemoWorkspace demo([](const std::string& prompt, int sample) -> std::string {
    if (prompt.find("Asthma") != std::string::npos) throw Error(ErrorCode::kProviderError, "down");
    return testing::demo_answer(prompt, sample);
  });
  demo.load();
  auto report = demo.ws->run(demo.config());
  EXPECT_EQ(report.status, RunStatus::kCompleted);
  EXPECT_GT(report.items_failed, 0u);
  for (const auto& t : demo.ws->store().all_triples()) EXPECT_NE(t.subject_code_id, "C07");
}

TEST(RunConfig, RejectsBadConfigs) {
  EXPECT_THROW(extract::parse_run_config("{}"), Error);
  EXPECT_THROW(extract::parse_run_config("not json"), Error);
  auto files = testing::write_demo_inputs(testing::temp_dir("cfg"));
  std::ifstream in(files.run_config);
  auto j = nlohmann::json::parse(in);
  auto cfg = extract::parse_run_config(j.dump());
  ASSERT_EQ(cfg.groups.size(), 2u);
  EXPECT_EQ(cfg.groups[1].specs.size(), 3u);
  EXPECT_EQ(cfg.groups[1].samples(), 3);

  auto bad = j;
  bad["relationships"][1]["template"] = "different <<<concept>>>";
  EXPECT_THROW(extract::parse_run_config(bad.dump()), Error) << "group members must share a template";
  bad = j;
  bad["relationships"][0]["elements"].push_back({{"name", "second"}, {"kind", "free_text"}});
  EXPECT_THROW(extract::parse_run_config(bad.dump()), Error) << "two persisted answers";
  bad = j;
  bad["relationships"][0]["template"] = "no placeholder";
  EXPECT_THROW(extract::parse_run_config(bad.dump()), Error);
  bad = j;
  bad["unknown_key"] = 1;
  EXPECT_THROW(extract::parse_run_config(bad.dump()), Error);
}

}  // namespace
}  // namespace termgraph
