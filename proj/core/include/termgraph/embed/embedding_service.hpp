#pragma once

#include <atomic>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>

#include "termgraph/embed/embedder.hpp"
#include "termgraph/embed/vector.hpp"

namespace termgraph::embed {

// Persistent home for vectors keyed by (owner, model_id, kind).
class VectorRepository {
 public:
  virtual ~VectorRepository() = default;

  virtual std::optional<EmbeddingVector> load_vector(const std::string& owner,
                                                     const std::string& model_id,
                                                     VectorKind kind) = 0;
  // Stores the vector unless one already exists for its key, then returns
  // whatever is stored (first write wins).
  virtual EmbeddingVector store_vector_if_absent(const EmbeddingVector& vector) = 0;
};

class InMemoryVectorRepository : public VectorRepository {
 public:
  std::optional<EmbeddingVector> load_vector(const std::string& owner, const std::string& model_id,
                                             VectorKind kind) override;
  EmbeddingVector store_vector_if_absent(const EmbeddingVector& vector) override;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::tuple<std::string, std::string, VectorKind>, EmbeddingVector> vectors_;
};

struct StringVectors {
  EmbeddingVector cls;
  EmbeddingVector mean_pooled;
  EmbeddingVector max_pooled;

  const EmbeddingVector& get(VectorKind kind) const;
};

// Embeds strings through a cache backed by a VectorRepository. The embedder
// runs at most once per (text, model): concurrent callers for the same text
// share one in-flight computation, and persisted vectors are reused across
// processes.
class EmbeddingService {
 public:
  EmbeddingService(Embedder& embedder, VectorRepository& repository);

  // Throws kInvalidArgument for empty text and kEmbedError when the embedder
  // fails or returns vectors of the wrong length or with non-finite values.
  StringVectors embed_string(const std::string& text);

  std::optional<StringVectors> cached_string_vectors(const std::string& text);

  // Mean of the CLS vectors of the given strings, persisted once under
  // `owner`. Throws kDependencyMissing when any string lacks a CLS vector.
  EmbeddingVector summary_vector(const std::string& owner, std::span<const std::string> strings);

  std::optional<EmbeddingVector> load(const std::string& owner, VectorKind kind);
  EmbeddingVector store(const EmbeddingVector& vector);

  const std::string& model_id() const noexcept { return model_id_; }
  std::size_t dimension() const noexcept { return dimension_; }
  long embedder_calls() const noexcept { return embedder_calls_.load(); }

 private:
  StringVectors compute_and_store(const std::string& text);

  Embedder& embedder_;
  VectorRepository& repository_;
  std::string model_id_;
  std::size_t dimension_;
  std::atomic<long> embedder_calls_{0};

  std::mutex inflight_mu_;
  std::map<std::string, std::shared_future<StringVectors>> inflight_;
};

}  // namespace termgraph::embed
