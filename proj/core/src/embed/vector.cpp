#include "termgraph/embed/vector.hpp"

#include <algorithm>
#include <cmath>

#include "termgraph/error.hpp"

namespace termgraph::embed {

std::string_view vector_kind_name(VectorKind kind) {
  switch (kind) {
    case VectorKind::kCls: return "CLS";
    case VectorKind::kMeanPooled: return "MEAN_POOLED";
    case VectorKind::kMaxPooled: return "MAX_POOLED";
    case VectorKind::kSummary: return "SUMMARY";
  }
  return "CLS";
}

VectorKind parse_vector_kind(std::string_view name) {
  if (name == "CLS") return VectorKind::kCls;
  if (name == "MEAN_POOLED") return VectorKind::kMeanPooled;
  if (name == "MAX_POOLED") return VectorKind::kMaxPooled;
  if (name == "SUMMARY") return VectorKind::kSummary;
  throw Error(ErrorCode::kInvalidArgument, "unknown vector kind '" + std::string(name) + "'");
}

std::string string_owner(std::string_view text) { return "string:" + std::string(text); }

std::string code_owner(std::string_view terminology, std::string_view code_id) {
  return "code:" + std::string(terminology) + ":" + std::string(code_id);
}

std::string expansion_owner(std::string_view style, std::string_view source_text) {
  return "expansion:" + std::string(style) + ":" + std::string(source_text);
}

EmbeddingVector pool_vectors(std::span<const EmbeddingVector> vectors, PoolMode mode,
                             std::string owner) {
  if (vectors.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot pool an empty vector list");
  const auto& first = vectors.front();
  for (const auto& v : vectors) {
    if (v.model_id != first.model_id || v.values.size() != first.values.size())
      throw Error(ErrorCode::kMixedVectors, "pooled vectors must share model and dimension");
  }
  EmbeddingVector out;
  out.model_id = first.model_id;
  out.kind = VectorKind::kSummary;
  out.owner = std::move(owner);
  out.values = first.values;
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    const auto& values = vectors[i].values;
    for (std::size_t d = 0; d < values.size(); ++d) {
      if (mode == PoolMode::kMean)
        out.values[d] += values[d];
      else
        out.values[d] = std::max(out.values[d], values[d]);
    }
  }
  if (mode == PoolMode::kMean) {
    const auto n = static_cast<double>(vectors.size());
    for (auto& x : out.values) x /= n;
  }
  return out;
}

double norm(std::span<const double> v) {
  double sum = 0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw Error(ErrorCode::kMixedVectors, "cosine distance of vectors with different dimensions");
  double dot = 0;
  double uu = 0;
  double vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0 || vv == 0) throw Error(ErrorCode::kZeroVector, "cosine distance of a zero vector");
  // Rounding can push the ratio a hair outside [-1, 1].
  double similarity = std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
  return 1.0 - similarity;
}

}  // namespace termgraph::embed
