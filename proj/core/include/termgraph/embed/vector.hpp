#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace termgraph::embed {

enum class VectorKind { kCls, kMeanPooled, kMaxPooled, kSummary };

std::string_view vector_kind_name(VectorKind kind);
VectorKind parse_vector_kind(std::string_view name);

// Owner keys identify what a vector represents.
std::string string_owner(std::string_view text);
std::string code_owner(std::string_view terminology, std::string_view code_id);
std::string expansion_owner(std::string_view style, std::string_view source_text);

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;
  VectorKind kind = VectorKind::kCls;
  std::string owner;
};

enum class PoolMode { kMean, kMax };

// Component-wise mean or max. All inputs must share model_id and
// dimension (kMixedVectors otherwise); the result has kind kSummary.
EmbeddingVector pool_vectors(std::span<const EmbeddingVector> vectors, PoolMode mode,
                             std::string owner = {});

// 1 - u.v / (|u| |v|). Throws kMixedVectors on a dimension mismatch and
// kZeroVector when either input has zero norm.
double cosine_distance(std::span<const double> u, std::span<const double> v);

double norm(std::span<const double> v);

}  // namespace termgraph::embed
