#include "termgraph/embed/embedding_service.hpp"

#include <cmath>

#include "termgraph/error.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::embed {

std::optional<EmbeddingVector> InMemoryVectorRepository::load_vector(const std::string& owner,
                                                                     const std::string& model_id,
                                                                     VectorKind kind) {
  std::lock_guard lock(mu_);
  auto it = vectors_.find({owner, model_id, kind});
  if (it == vectors_.end()) return std::nullopt;
  return it->second;
}

EmbeddingVector InMemoryVectorRepository::store_vector_if_absent(const EmbeddingVector& vector) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = vectors_.try_emplace({vector.owner, vector.model_id, vector.kind}, vector);
  return it->second;
}

std::size_t InMemoryVectorRepository::size() const {
  std::lock_guard lock(mu_);
  return vectors_.size();
}

const EmbeddingVector& StringVectors::get(VectorKind kind) const {
  switch (kind) {
    case VectorKind::kCls: return cls;
    case VectorKind::kMeanPooled: return mean_pooled;
    case VectorKind::kMaxPooled: return max_pooled;
    case VectorKind::kSummary: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "string vectors have no SUMMARY kind");
}

EmbeddingService::EmbeddingService(Embedder& embedder, VectorRepository& repository)
    : embedder_(embedder),
      repository_(repository),
      model_id_(embedder.model_id()),
      dimension_(embedder.dimension()) {}

std::optional<StringVectors> EmbeddingService::cached_string_vectors(const std::string& text) {
  auto owner = string_owner(text);
  auto cls = repository_.load_vector(owner, model_id_, VectorKind::kCls);
  auto mean = repository_.load_vector(owner, model_id_, VectorKind::kMeanPooled);
  auto max = repository_.load_vector(owner, model_id_, VectorKind::kMaxPooled);
  if (!cls || !mean || !max) return std::nullopt;
  return StringVectors{std::move(*cls), std::move(*mean), std::move(*max)};
}

StringVectors EmbeddingService::embed_string(const std::string& text) {
  if (text::trim(text).empty())
    throw Error(ErrorCode::kInvalidArgument, "cannot embed empty text");
  if (auto cached = cached_string_vectors(text)) return *cached;

  std::shared_future<StringVectors> future;
  bool owner_of_work = false;
  std::promise<StringVectors> promise;
  {
    std::lock_guard lock(inflight_mu_);
    auto it = inflight_.find(text);
    if (it != inflight_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      inflight_.emplace(text, future);
      owner_of_work = true;
    }
  }
  if (!owner_of_work) return future.get();

  try {
    // Another thread may have finished between the cache probe and the
    // in-flight registration.
    auto cached = cached_string_vectors(text);
    promise.set_value(cached ? *cached : compute_and_store(text));
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(inflight_mu_);
    inflight_.erase(text);
  }
  return future.get();
}

StringVectors EmbeddingService::compute_and_store(const std::string& text) {
  ++embedder_calls_;
  StringEmbedding raw = embedder_.embed(text);
  auto owner = string_owner(text);
  auto make = [&](std::vector<double> values, VectorKind kind) {
    if (values.size() != dimension_)
      throw Error(ErrorCode::kEmbedError,
                  "embedder " + model_id_ + " returned " + std::to_string(values.size()) +
                      " components for a dimension-" + std::to_string(dimension_) + " model");
    for (double x : values)
      if (!std::isfinite(x))
        throw Error(ErrorCode::kEmbedError, "embedder " + model_id_ + " returned a non-finite value");
    return EmbeddingVector{std::move(values), model_id_, kind, owner};
  };
  auto cls = make(std::move(raw.cls), VectorKind::kCls);
  auto mean = make(std::move(raw.mean_pooled), VectorKind::kMeanPooled);
  auto max = make(std::move(raw.max_pooled), VectorKind::kMaxPooled);
  return StringVectors{repository_.store_vector_if_absent(cls),
                       repository_.store_vector_if_absent(mean),
                       repository_.store_vector_if_absent(max)};
}

EmbeddingVector EmbeddingService::summary_vector(const std::string& owner,
                                                 std::span<const std::string> strings) {
  if (auto existing = repository_.load_vector(owner, model_id_, VectorKind::kSummary))
    return *existing;
  if (strings.empty())
    throw Error(ErrorCode::kDependencyMissing, "summary vector for " + owner + " has no strings");
  std::vector<EmbeddingVector> cls;
  cls.reserve(strings.size());
  for (const auto& s : strings) {
    auto v = repository_.load_vector(string_owner(s), model_id_, VectorKind::kCls);
    if (!v)
      throw Error(ErrorCode::kDependencyMissing, "no CLS vector for string '" + s + "'");
    cls.push_back(std::move(*v));
  }
  return repository_.store_vector_if_absent(pool_vectors(cls, PoolMode::kMean, owner));
}

std::optional<EmbeddingVector> EmbeddingService::load(const std::string& owner, VectorKind kind) {
  return repository_.load_vector(owner, model_id_, kind);
}

EmbeddingVector EmbeddingService::store(const EmbeddingVector& vector) {
  return repository_.store_vector_if_absent(vector);
}

}  // namespace termgraph::embed
