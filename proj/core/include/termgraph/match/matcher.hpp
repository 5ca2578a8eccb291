#pragma once

#include <atomic>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "termgraph/embed/embedding_service.hpp"
#include "termgraph/embed/vector.hpp"
#include "termgraph/store/store.hpp"

namespace termgraph::match {

inline constexpr int kDefaultTopN = 4;

// Which vectors stand for the object string (V_x) and for each code (V_c).
// SUMMARY means the code summary vector on the subject side and the
// expansion summary vectors on the object side.
struct VectorSelection {
  std::set<embed::VectorKind> subject_kinds{embed::VectorKind::kCls};
  std::set<embed::VectorKind> object_kinds{embed::VectorKind::kCls};
  bool include_expansions = false;

  std::string describe() const;
};

VectorSelection parse_selection(const std::string& subject_kinds, const std::string& object_kinds,
                                bool include_expansions);

struct MatchQuery {
  std::string x;
  store::Id code_set_id = 0;
  VectorSelection selection;
  double z = 2.0;
  int n = kDefaultTopN;
};

struct MatchResult {
  std::vector<store::RankedCode> ranked;
  std::optional<std::string> best;
  std::string query_fingerprint;
  bool from_cache = false;
};

// Candidate vectors of one code.
struct CodeVectors {
  std::string code_id;
  std::vector<std::vector<double>> vectors;
};

// Nearest-code search over a fixed candidate set. d(x, c) is the smallest
// cosine distance over all pairs in V_x x V_c; only codes with d < z are
// kept, ordered by distance and then code_id, truncated to n.
class VectorIndex {
 public:
  virtual ~VectorIndex() = default;
  virtual std::vector<store::RankedCode> search(std::span<const std::vector<double>> query,
                                                double z, int n) = 0;
  // Pairwise cosine distances evaluated so far.
  virtual long distance_computations() const = 0;
};

// Exhaustive search.
class ExactIndex : public VectorIndex {
 public:
  explicit ExactIndex(std::vector<CodeVectors> codes);

  std::vector<store::RankedCode> search(std::span<const std::vector<double>> query, double z,
                                        int n) override;
  long distance_computations() const override { return computations_.load(); }

 private:
  std::vector<CodeVectors> codes_;
  std::atomic<long> computations_{0};
};

struct BatchDefaults {
  store::Id code_set_id = 0;
  VectorSelection selection;
  double z = 2.0;
  int n = kDefaultTopN;
};

struct BatchResult {
  std::vector<store::StoredMatch> matches;
  std::size_t computed = 0;
  std::size_t cached = 0;
};

class Matcher {
 public:
  Matcher(store::Store& store, embed::EmbeddingService& embeddings);

  // Throws kInvalidArgument for z outside [0, 2] or n < 1, kEmptySet for an
  // empty code set and kDependencyMissing when a side has no vectors for the
  // selection. Results are persisted under the query fingerprint and reused.
  MatchResult match_string_to_codes(const MatchQuery& query);

  // Matches every distinct free-text object of a run once.
  BatchResult batch_match(store::Id run_id, const BatchDefaults& defaults);

  std::string fingerprint(const MatchQuery& query, const store::CodeSet& code_set) const;

  long distance_computations() const noexcept { return computations_.load(); }

  // Vector sets used for a query; exposed for tests and oracles.
  std::vector<std::vector<double>> object_vectors(const std::string& x, const VectorSelection& sel);
  std::vector<CodeVectors> code_vectors(const store::CodeSet& code_set, const VectorSelection& sel);

 private:
  store::Store& store_;
  embed::EmbeddingService& embeddings_;
  std::atomic<long> computations_{0};
};

// Review file: one tab-separated line per ranked code with columns
// object, rank, code_id, main_string, distance.
void write_review_export(std::ostream& out, store::Store& store,
                         std::span<const store::StoredMatch> matches);

}  // namespace termgraph::match
