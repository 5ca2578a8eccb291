#include "termgraph/match/matcher.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "termgraph/error.hpp"
#include "termgraph/util/hash.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::match {

using embed::VectorKind;

namespace {

bool is_string_kind(VectorKind k) { return k != VectorKind::kSummary; }

std::string kinds_text(const std::set<VectorKind>& kinds) {
  std::vector<std::string> names;
  for (auto k : kinds) names.emplace_back(embed::vector_kind_name(k));
  return text::join(names, ",");
}

std::set<VectorKind> parse_kinds(const std::string& list, const char* side) {
  std::set<VectorKind> kinds;
  for (const auto& part : text::split(list, ',')) {
    auto name = std::string(text::trim(part));
    if (name.empty()) continue;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    kinds.insert(embed::parse_vector_kind(name));
  }
  if (kinds.empty())
    throw Error(ErrorCode::kInvalidArgument, std::string(side) + " vector kinds must not be empty");
  return kinds;
}

std::string clean_field(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\t', ' ');
  std::replace(out.begin(), out.end(), '\n', ' ');
  return out;
}

}  // namespace

std::string VectorSelection::describe() const {
  return "subject=" + kinds_text(subject_kinds) + ";object=" + kinds_text(object_kinds) +
         ";expansions=" + (include_expansions ? "1" : "0");
}

VectorSelection parse_selection(const std::string& subject_kinds, const std::string& object_kinds,
                                bool include_expansions) {
  VectorSelection sel;
  sel.subject_kinds = parse_kinds(subject_kinds, "subject");
  sel.object_kinds = parse_kinds(object_kinds, "object");
  sel.include_expansions = include_expansions;
  return sel;
}

ExactIndex::ExactIndex(std::vector<CodeVectors> codes) : codes_(std::move(codes)) {}

std::vector<store::RankedCode> ExactIndex::search(std::span<const std::vector<double>> query,
                                                  double z, int n) {
  std::vector<store::RankedCode> ranked;
  long count = 0;
  for (const auto& code : codes_) {
    if (code.vectors.empty()) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& u : query)
      for (const auto& v : code.vectors) {
        best = std::min(best, embed::cosine_distance(u, v));
        ++count;
      }
    if (best < z) ranked.push_back({code.code_id, best});
  }
  computations_ += count;
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.code_id < b.code_id;
  });
  if (n >= 0 && ranked.size() > static_cast<std::size_t>(n)) ranked.resize(static_cast<std::size_t>(n));
  return ranked;
}

Matcher::Matcher(store::Store& store, embed::EmbeddingService& embeddings)
    : store_(store), embeddings_(embeddings) {}

std::string Matcher::fingerprint(const MatchQuery& query, const store::CodeSet& code_set) const {
  nlohmann::ordered_json j;
  j["x"] = query.x;
  j["selection"] = query.selection.describe();
  j["z"] = text::format_number(query.z);
  j["n"] = query.n;
  j["code_set"] = code_set.id;
  j["code_set_version"] = code_set.version;
  j["model"] = embeddings_.model_id();
  return hash::sha256_hex(j.dump());
}

std::vector<std::vector<double>> Matcher::object_vectors(const std::string& x,
                                                         const VectorSelection& sel) {
  std::vector<std::vector<double>> out;
  bool string_kinds = std::any_of(sel.object_kinds.begin(), sel.object_kinds.end(), is_string_kind);
  if (string_kinds) {
    auto vectors = embeddings_.embed_string(x);
    for (auto k : sel.object_kinds)
      if (is_string_kind(k)) out.push_back(vectors.get(k).values);
  }
  bool summary = sel.object_kinds.count(VectorKind::kSummary) > 0;
  if (summary || sel.include_expansions) {
    for (const auto& [style, generated] : store_.expansions_of(x, embeddings_.model_id(), std::nullopt)) {
      if (summary)
        if (auto v = embeddings_.load(embed::expansion_owner(style, x), VectorKind::kSummary))
          out.push_back(v->values);
      if (sel.include_expansions)
        for (const auto& g : generated) {
          auto vectors = embeddings_.embed_string(g);
          for (auto k : sel.object_kinds)
            if (is_string_kind(k)) out.push_back(vectors.get(k).values);
        }
    }
  }
  return out;
}

std::vector<CodeVectors> Matcher::code_vectors(const store::CodeSet& code_set,
                                               const VectorSelection& sel) {
  auto terminology = store_.get_terminology(code_set.terminology_id);
  const bool summary = sel.subject_kinds.count(VectorKind::kSummary) > 0;
  std::vector<CodeVectors> out;
  for (const auto& code_id : code_set.member_code_ids) {
    const auto* code = terminology.find(code_id);
    if (!code) throw Error(ErrorCode::kNotFound, "code set member " + code_id + " has no code");
    CodeVectors cv{code_id, {}};
    std::vector<std::string> texts;
    for (const auto& s : code->strings) {
      texts.push_back(s.text);
      auto vectors = embeddings_.embed_string(s.text);
      for (auto k : sel.subject_kinds)
        if (is_string_kind(k)) cv.vectors.push_back(vectors.get(k).values);
    }
    if (summary)
      cv.vectors.push_back(
          embeddings_.summary_vector(embed::code_owner(terminology.name, code_id), texts).values);
    if (sel.include_expansions) {
      const auto& main = code->main_text();
      for (const auto& [style, generated] :
           store_.expansions_of(main, embeddings_.model_id(), code_set.expansion_style)) {
        if (summary)
          if (auto v = embeddings_.load(embed::expansion_owner(style, main), VectorKind::kSummary))
            cv.vectors.push_back(v->values);
        for (const auto& g : generated) {
          auto vectors = embeddings_.embed_string(g);
          for (auto k : sel.subject_kinds)
            if (is_string_kind(k)) cv.vectors.push_back(vectors.get(k).values);
        }
      }
    }
    out.push_back(std::move(cv));
  }
  return out;
}

MatchResult Matcher::match_string_to_codes(const MatchQuery& query) {
  if (text::trim(query.x).empty()) throw Error(ErrorCode::kInvalidArgument, "match string is empty");
  if (!(query.z >= 0 && query.z <= 2))
    throw Error(ErrorCode::kInvalidArgument, "z must lie in [0, 2]");
  if (query.n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be at least 1");
  if (query.selection.subject_kinds.empty() || query.selection.object_kinds.empty())
    throw Error(ErrorCode::kInvalidArgument, "vector selection must name kinds on both sides");

  auto code_set = store_.get_code_set(query.code_set_id);
  if (code_set.member_code_ids.empty())
    throw Error(ErrorCode::kEmptySet, "code set '" + code_set.name + "' is empty");

  MatchResult result;
  result.query_fingerprint = fingerprint(query, code_set);
  if (auto stored = store_.find_match(result.query_fingerprint)) {
    result.ranked = stored->ranked;
    result.from_cache = true;
  } else {
    auto vx = object_vectors(query.x, query.selection);
    if (vx.empty())
      throw Error(ErrorCode::kDependencyMissing,
                  "no vectors for '" + query.x + "' under " + query.selection.describe());
    auto vc = code_vectors(code_set, query.selection);
    if (std::all_of(vc.begin(), vc.end(), [](const auto& c) { return c.vectors.empty(); }))
      throw Error(ErrorCode::kDependencyMissing, "no code vectors under " + query.selection.describe());
    ExactIndex index(std::move(vc));
    result.ranked = index.search(vx, query.z, query.n);
    computations_ += index.distance_computations();

    store::StoredMatch record;
    record.fingerprint = result.query_fingerprint;
    record.object_string = query.x;
    record.code_set_id = code_set.id;
    record.z = query.z;
    record.n = query.n;
    record.selection = query.selection.describe();
    record.ranked = result.ranked;
    store_.save_match(record);
  }
  if (!result.ranked.empty()) result.best = result.ranked.front().code_id;
  return result;
}

BatchResult Matcher::batch_match(store::Id run_id, const BatchDefaults& defaults) {
  auto run = store_.get_run(run_id);
  if (run.status == store::RunStatus::kPending)
    throw Error(ErrorCode::kInvalidArgument, "run " + std::to_string(run_id) + " has not started");
  std::set<std::string> objects;
  for (const auto& t : store_.triples_for_run(run_id))
    if (t.object_kind == store::ObjectKind::kFreeText) objects.insert(t.object_value);

  BatchResult out;
  for (const auto& x : objects) {
    MatchQuery q{x, defaults.code_set_id, defaults.selection, defaults.z, defaults.n};
    auto r = match_string_to_codes(q);
    r.from_cache ? ++out.cached : ++out.computed;
    out.matches.push_back(*store_.find_match(r.query_fingerprint));
  }
  return out;
}

void write_review_export(std::ostream& out, store::Store& store,
                         std::span<const store::StoredMatch> matches) {
  out << "object\trank\tcode_id\tmain_string\tdistance\n";
  std::map<store::Id, store::Terminology> terminologies;
  for (const auto& m : matches) {
    auto cs = store.get_code_set(m.code_set_id);
    auto it = terminologies.find(cs.terminology_id);
    if (it == terminologies.end())
      it = terminologies.emplace(cs.terminology_id, store.get_terminology(cs.terminology_id)).first;
    for (std::size_t i = 0; i < m.ranked.size(); ++i) {
      const auto* code = it->second.find(m.ranked[i].code_id);
      out << clean_field(m.object_string) << '\t' << i + 1 << '\t' << m.ranked[i].code_id << '\t'
          << (code ? clean_field(code->main_text()) : std::string()) << '\t'
          << text::format_number(m.ranked[i].distance) << '\n';
    }
  }
}

}  // namespace termgraph::match
