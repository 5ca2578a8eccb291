#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "termgraph/embed/vector.hpp"

namespace termgraph::embed {

struct StringEmbedding {
  std::vector<double> cls;
  std::vector<double> mean_pooled;
  std::vector<double> max_pooled;
};

// A text embedding model. embed() must be deterministic for a given
// model_id and safe to call concurrently.
class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::string model_id() const = 0;
  virtual std::size_t dimension() const = 0;
  // Throws Error(kEmbedError) on failure.
  virtual StringEmbedding embed(std::string_view text) = 0;
};

// Offline embedder for tests and demos.
//
// Vectors come from a lookup file with one record per line:
//
//   text <TAB> model_id <TAB> kind <TAB> c1,c2,...,cd
//
// where kind is CLS, MEAN_POOLED or MAX_POOLED. Records for other model ids
// are ignored. Any (text, kind) absent from the file is produced by seeded
// hashing: each lowercase word token maps to a pseudo-random direction built
// from its character trigrams, MEAN_POOLED and MAX_POOLED pool the token
// vectors, and CLS adds a whole-phrase component to the token mean. Strings
// sharing words therefore land near each other.
class FixtureEmbedder : public Embedder {
 public:
  FixtureEmbedder(std::string model_id, std::size_t dimension, std::uint64_t seed = 0);

  static FixtureEmbedder from_file(const std::filesystem::path& path, std::string model_id,
                                   std::size_t dimension, std::uint64_t seed = 0);

  // Adds or replaces a lookup entry; the length is not checked here.
  void set_vector(std::string text, VectorKind kind, std::vector<double> values);

  std::string model_id() const override { return model_id_; }
  std::size_t dimension() const override { return dimension_; }
  StringEmbedding embed(std::string_view text) override;

  std::vector<double> hashed_vector(std::string_view feature) const;

 private:
  std::string model_id_;
  std::size_t dimension_;
  std::uint64_t seed_;
  std::map<std::pair<std::string, VectorKind>, std::vector<double>> lookup_;
};

}  // namespace termgraph::embed
