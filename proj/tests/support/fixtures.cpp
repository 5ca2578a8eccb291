#include "support/fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "termgraph/error.hpp"
#include "termgraph/extract/spec.hpp"
#include "termgraph/store/import_format.hpp"

namespace termgraph::testing {

namespace fs = std::filesystem;
using nlohmann::json;

ScriptedProvider::ScriptedProvider(Script script, std::string model, bool structured)
    : script_(std::move(script)), model_(std::move(model)), structured_(structured) {}

llm::TokenUsage ScriptedProvider::usage_for(const std::string& prompt, const std::string& response) {
  return {static_cast<std::int64_t>(prompt.size() / 4 + 1),
          static_cast<std::int64_t>(response.size() / 4 + 1)};
}

llm::ProviderResponse ScriptedProvider::send(const std::string& prompt,
                                             const llm::RequestOptions& options) {
  ++calls_;
  {
    std::lock_guard lock(mu_);
    prompts_.push_back(prompt);
  }
  auto text = script_(prompt, options.sample_index);
  return {text, usage_for(prompt, text)};
}

std::vector<std::string> ScriptedProvider::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

RecordingScript::RecordingScript(ScriptedProvider::Script script, const fs::path& transcript,
                                 std::string model)
    : inner_(std::move(script), std::move(model)), recorder_(inner_, transcript) {}

std::string line_after(const std::string& prompt, const std::string& marker) {
  auto at = prompt.rfind(marker);
  if (at == std::string::npos) return {};
  at += marker.size();
  auto end = prompt.find('\n', at);
  return prompt.substr(at, end == std::string::npos ? std::string::npos : end - at);
}

fs::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  auto dir = fs::temp_directory_path() /
             ("termgraph-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

namespace {

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kNotFound, "cannot write " + path.string());
  out << body;
}

const char* kConditionRows =
    "code_id\tstring\trank\n"
    "C01\tUrinary tract infection\t0\n"
    "C01\tUTI\t1\n"
    "C01\tbladder infection\t2\n"
    "C02\tStaphylococcal skin infection\t0\n"
    "C02\tstaph skin infection\t1\n"
    "C03\tCommunity acquired pneumonia\t0\n"
    "C03\tpneumonia\t1\n"
    "C04\tType 2 diabetes mellitus\t0\n"
    "C04\tadult onset diabetes\t1\n"
    "C05\tEssential hypertension\t0\n"
    "C05\thigh blood pressure\t1\n"
    "C06\tMigraine\t0\n"
    "C06\tmigraine headache\t1\n"
    "C07\tAsthma\t0\n"
    "C08\tClosed fracture of finger\t0\n"
    "C08\tbroken finger\t1\n"
    "C09\tCongestive heart failure\t0\n"
    "C09\tCHF\t1\n"
    "C10\tIron deficiency anemia\t0\n"
    "C10\tlow iron anemia\t1\n";

const char* kTreatmentRows =
    "code_id\tstring\trank\n"
    "T01\tnitrofurantoin\t0\n"
    "T02\ttrimethoprim-sulfamethoxazole\t0\n"
    "T02\tco-trimoxazole\t1\n"
    "T03\tcephalexin\t0\n"
    "T04\tclindamycin\t0\n"
    "T05\tvancomycin\t0\n"
    "T06\tamoxicillin\t0\n"
    "T07\tazithromycin\t0\n"
    "T08\tmetformin\t0\n"
    "T09\tinsulin glargine\t0\n"
    "T10\tlisinopril\t0\n"
    "T11\tsumatriptan\t0\n"
    "T12\tibuprofen\t0\n"
    "T13\tnaproxen\t0\n"
    "T14\talbuterol\t0\n"
    "T15\tfluticasone inhaler\t0\n"
    "T16\tfurosemide\t0\n"
    "T17\tferrous sulfate\t0\n"
    "T17\toral iron\t1\n"
    "T18\tfinger splint\t0\n"
    "T19\tphenazopyridine\t0\n"
    "T20\tincision and drainage\t0\n";

const char* kHierarchyRows =
    "treatment\t\n"
    "medication\ttreatment\n"
    "procedure\ttreatment\n"
    "antibiotic\tmedication\n"
    "analgesic\tmedication\n"
    "nitrofurantoin\tantibiotic\n"
    "cephalexin\tantibiotic\n"
    "ibuprofen\tanalgesic\n"
    "finger splint\tprocedure\n";

std::string demo_run_config() {
  const std::string profile =
      "Answer each question about the condition below, as a clinician would.\n"
      "Condition: <<<concept>>>";
  json cfg;
  cfg["code_set"] = kConditionSet;
  cfg["workers"] = 1;
  cfg["pricing"] = {{"prompt_token", "0.000001"}, {"completion_token", "0.000002"}};
  cfg["budget"] = "5.00";
  cfg["relationships"] = json::array({
      {{"id", "treated_with"},
       {"predicate", "may be treated with"},
       {"group", "treatment"},
       {"template", "List the treatments commonly used for the condition below.\nCondition: <<<concept>>>"},
       {"elements", json::array({{{"name", "treatments"}, {"kind", "free_text"}, {"multi_response", true},
                                  {"description", "one treatment per entry"}}})},
       {"beceptivity", {{"method", "requery"}, {"min_required", 6}, {"scale_max", 10},
                        {"max_refinement_depth", 2}}},
       {"expansion_styles", json::array({kExpansionStyle})}},
      {{"id", "severity"},
       {"predicate", "has typical severity"},
       {"group", "profile"},
       {"template", profile},
       {"elements", json::array({{{"name", "severity"}, {"kind", "categorical"},
                                  {"description", "usual severity at presentation"},
                                  {"dictionary", {{"a", "mild"}, {"b", "moderate"}, {"c", "severe"}}}}})},
       {"are_you_sure", {{"mode", "vote"}, {"repeats", 3}}}},
      {{"id", "chronic"},
       {"predicate", "is chronic"},
       {"group", "profile"},
       {"template", profile},
       {"elements", json::array({{{"name", "chronic"}, {"kind", "boolean_like"}},
                                 {{"name", "reasoning"}, {"kind", "free_text"}, {"no_write", true},
                                  {"description", "one sentence explaining your answers"}}})},
       {"are_you_sure", {{"mode", "boolean_vote"}, {"repeats", 3}}}},
      {{"id", "onset_age"},
       {"predicate", "has typical onset age"},
       {"group", "profile"},
       {"template", profile},
       {"elements", json::array({{{"name", "onset_age"}, {"kind", "numeric"},
                                  {"description", "typical age in years at onset"}}})},
       {"are_you_sure", {{"mode", "average"}, {"repeats", 3}}}},
  });
  return cfg.dump(2) + "\n";
}

struct ConditionProfile {
  std::vector<std::string> treatments;
  std::vector<std::string> severity;  // dictionary key per sample
  std::vector<std::string> chronic;   // per sample
  std::vector<double> onset;          // per sample
};

const std::map<std::string, ConditionProfile>& profiles() {
  static const std::map<std::string, ConditionProfile> p = {
      {"Urinary tract infection", {{"antibiotics", "phenazopyridine"}, {"a", "b", "a"}, {"no", "no", "no"}, {30, 35, 28}}},
      {"Staphylococcal skin infection", {{"antibiotics", "incision and drainage"}, {"b", "b", "a"}, {"no", "no", "yes"}, {25, 30, 20}}},
      {"Community acquired pneumonia", {{"azithromycin", "amoxicillin"}, {"b", "c", "b"}, {"no", "no", "no"}, {60, 65, 55}}},
      {"Type 2 diabetes mellitus", {{"metformin", "insulin glargine"}, {"b", "b", "b"}, {"yes", "yes", "yes"}, {50, 45, 55}}},
      {"Essential hypertension", {{"lisinopril"}, {"a", "b", "a"}, {"yes", "yes", "no"}, {45, 50, 40}}},
      // "d" is not in the dictionary.
      {"Migraine", {{"sumatriptan", "ibuprofen"}, {"b", "d", "b"}, {"yes", "no", "yes"}, {20, 25, 18}}},
      {"Asthma", {{"albuterol", "inhaled corticosteroids"}, {"b", "b", "c"}, {"yes", "yes", "yes"}, {8, 10, 6}}},
      {"Closed fracture of finger", {{"finger splint", "pain medication"}, {"a", "a", "b"}, {"no", "no", "no"}, {35, 30, 40}}},
      {"Congestive heart failure", {{"furosemide", "lisinopril"}, {"c", "c", "b"}, {"yes", "yes", "yes"}, {70, 68, 72}}},
      {"Iron deficiency anemia", {{"ferrous sulfate"}, {"a", "b", "a"}, {"no", "yes", "no"}, {30, 25, 35}}},
  };
  return p;
}

// Beceptivity on a 0..10 scale; anything unlisted is specific enough.
double term_beceptivity(const std::string& term) {
  static const std::map<std::string, double> values = {
      {"antibiotics", 3}, {"pain medication", 2}, {"nsaids", 5},
      {"inhaled corticosteroids", 6}, {"incision and drainage", 7},
  };
  std::string key;
  for (char c : term) key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto it = values.find(key);
  return it == values.end() ? 8 : it->second;
}

// Replacements depend on the concept: the same general answer is refined
// differently for different conditions.
std::vector<std::string> refinements(const std::string& item, const std::string& condition) {
  if (item == "antibiotics" && condition == "Urinary tract infection")
    return {"nitrofurantoin", "trimethoprim-sulfamethoxazole"};
  if (item == "antibiotics" && condition == "Staphylococcal skin infection")
    return {"cephalexin", "clindamycin"};
  if (item == "pain medication") return {"ibuprofen", "NSAIDs"};
  if (item == "NSAIDs") return {"naproxen"};
  return {item + " (specific)"};
}

std::string structured(const json& body) { return body.dump(); }

}  // namespace

std::string demo_answer(const std::string& prompt, int sample) {
  auto too_general = prompt.find("is too general");
  auto condition = line_after(prompt, "Condition: ");
  if (too_general != std::string::npos) {
    auto open = prompt.rfind("The answer \"", too_general);
    auto start = open + std::string("The answer \"").size();
    auto item = prompt.substr(start, prompt.find('"', start) - start);
    return structured({{"treatments", refinements(item, condition)}});
  }
  if (prompt.find("rate the beceptivity") != std::string::npos)
    return structured({{"beceptivity", term_beceptivity(line_after(prompt, "Term: "))}});
  if (prompt.find("Term: ") != std::string::npos) {
    auto term = line_after(prompt, "Term: ");
    return structured({{"expansions", {term + " medicine", "a treatment called " + term}}});
  }
  auto it = profiles().find(condition);
  if (it == profiles().end()) return "{}";
  const auto& p = it->second;
  if (prompt.find("List the treatments") != std::string::npos)
    return structured({{"treatments", p.treatments}});
  auto k = static_cast<std::size_t>(sample) % 3;
  return structured({{"severity", p.severity[k]},
                     {"chronic", p.chronic[k]},
                     {"reasoning", "Typical course of " + condition + "."},
                     {"onset_age", p.onset[k]}});
}

DemoFiles write_demo_inputs(const fs::path& dir) {
  fs::create_directories(dir);
  DemoFiles f;
  f.dir = dir;
  f.conditions = dir / "conditions.tsv";
  f.treatments = dir / "treatments.tsv";
  f.hierarchy = dir / "treatment_classes.tsv";
  f.run_config = dir / "run.json";
  f.transcript = dir / "transcript.jsonl";
  write_text(f.conditions, kConditionRows);
  write_text(f.treatments, kTreatmentRows);
  write_text(f.hierarchy, kHierarchyRows);
  write_text(f.run_config, demo_run_config());
  return f;
}

service::Settings demo_settings(const DemoFiles& files, const std::string& store_path) {
  service::Settings s;
  s.store_path = store_path;
  s.provider.kind = "replay";
  s.provider.transcript = files.transcript.string();
  s.provider.model = "replay";
  s.embedder.lookup_file = files.embedder.empty() ? std::string() : files.embedder.string();
  s.pricing.per_prompt_token = llm::Money::parse("0.000001");
  s.pricing.per_completion_token = llm::Money::parse("0.000002");
  return s;
}

std::int64_t run_demo_workflow(service::Workspace& ws, const DemoFiles& files) {
  ws.import_terminology(kConditions, store::read_delimited_file(files.conditions));
  ws.import_terminology(kTreatments, store::read_delimited_file(files.treatments));
  std::ifstream h(files.hierarchy);
  ws.import_hierarchy(kTreatments, store::read_hierarchy(h));
  ws.create_code_set(kConditions, kConditionSet, "all", std::nullopt);
  ws.create_code_set(kTreatments, kTreatmentSet, "all", std::string(kExpansionStyle));
  auto report = ws.run(extract::load_run_config(files.run_config.string()));
  if (report.status != store::RunStatus::kCompleted)
    throw Error(ErrorCode::kInvalidArgument, "demo run ended " +
                                                 std::string(store::run_status_name(report.status)) +
                                                 ": " + report.error);
  service::BatchRequest batch;
  batch.run_id = report.run_id;
  batch.code_set = kTreatmentSet;
  ws.batch_match(batch);
  return report.run_id;
}

void record_demo_transcript(const DemoFiles& files) {
  fs::remove(files.transcript);
  auto settings = demo_settings(files, ":memory:");
  service::Workspace ws(settings, std::make_unique<RecordingScript>(demo_answer, files.transcript),
                        nullptr);
  run_demo_workflow(ws, files);
}

DemoFiles make_demo(const fs::path& dir) {
  auto files = write_demo_inputs(dir);
  record_demo_transcript(files);
  return files;
}

}  // namespace termgraph::testing
