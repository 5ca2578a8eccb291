#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "termgraph/llm/provider.hpp"
#include "termgraph/llm/replay.hpp"
#include "termgraph/service/settings.hpp"
#include "termgraph/service/workspace.hpp"

namespace termgraph::testing {

// Provider answering from a function of (prompt, sample index). Usage is
// derived from the text lengths so recordings are deterministic.
class ScriptedProvider : public llm::Provider {
 public:
  using Script = std::function<std::string(const std::string& prompt, int sample)>;

  explicit ScriptedProvider(Script script, std::string model = "scripted", bool structured = true);

  llm::ProviderResponse send(const std::string& prompt, const llm::RequestOptions& options) override;
  llm::ProviderCapabilities capabilities() const override { return {structured_}; }
  std::string model_id() const override { return model_; }

  long calls() const noexcept { return calls_.load(); }
  std::vector<std::string> prompts() const;

  static llm::TokenUsage usage_for(const std::string& prompt, const std::string& response);

 private:
  Script script_;
  std::string model_;
  bool structured_;
  std::atomic<long> calls_{0};
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

// A scripted provider whose exchanges are appended to a transcript.
class RecordingScript : public llm::Provider {
 public:
  RecordingScript(ScriptedProvider::Script script, const std::filesystem::path& transcript,
                  std::string model = "replay");
  llm::ProviderResponse send(const std::string& prompt, const llm::RequestOptions& options) override {
    return recorder_.send(prompt, options);
  }
  llm::ProviderCapabilities capabilities() const override { return inner_.capabilities(); }
  std::string model_id() const override { return inner_.model_id(); }

 private:
  ScriptedProvider inner_;
  llm::RecordingProvider recorder_;
};

// Text between `marker` and the end of its line, searching from the last
// occurrence.
std::string line_after(const std::string& prompt, const std::string& marker);

// --- demo scenario --------------------------------------------------------
//
// Ten synthetic conditions, a list of treatments to match against, and a
// run covering free-text answers with re-queried beceptivity and
// refinement, a categorical vote with a dictionary, a boolean vote, an
// averaged numeric answer and a no_write element.

struct DemoFiles {
  std::filesystem::path dir;
  std::filesystem::path conditions;   // TSV
  std::filesystem::path treatments;   // TSV
  std::filesystem::path hierarchy;    // treatment classes
  std::filesystem::path run_config;   // JSON
  std::filesystem::path transcript;   // JSONL, filled by record_demo_transcript
  std::filesystem::path embedder;     // fixture embedder lookup (may be empty)
};

inline constexpr const char* kConditions = "demo-conditions";
inline constexpr const char* kTreatments = "demo-treatments";
inline constexpr const char* kConditionSet = "all-conditions";
inline constexpr const char* kTreatmentSet = "all-treatments";
inline constexpr const char* kExpansionStyle = "simple";

DemoFiles write_demo_inputs(const std::filesystem::path& dir);

// The scripted model behind the demo.
std::string demo_answer(const std::string& prompt, int sample);

// Settings for a store at `store_path` replaying the demo transcript.
service::Settings demo_settings(const DemoFiles& files, const std::string& store_path);

// Runs the full demo workflow against the scripted model, appending every
// exchange to files.transcript (truncated first).
void record_demo_transcript(const DemoFiles& files);

// Writes inputs and the recorded transcript.
DemoFiles make_demo(const std::filesystem::path& dir);

// The whole workflow through the Workspace: import both terminologies and
// the hierarchy, create both code sets (treatments expanded), run the
// relationship config and batch-match the run's objects against the
// treatments. Returns the run id.
std::int64_t run_demo_workflow(service::Workspace& ws, const DemoFiles& files);

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace termgraph::testing
