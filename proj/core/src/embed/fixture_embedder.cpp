#include <cctype>
#include <fstream>

#include "termgraph/embed/embedder.hpp"
#include "termgraph/error.hpp"
#include "termgraph/util/hash.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::embed {

namespace {
constexpr double kPhraseWeight = 0.25;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void add_scaled(std::vector<double>& acc, const std::vector<double>& v, double scale) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * v[i];
}
}  // namespace

FixtureEmbedder::FixtureEmbedder(std::string model_id, std::size_t dimension, std::uint64_t seed)
    : model_id_(std::move(model_id)), dimension_(dimension), seed_(seed) {
  if (dimension_ == 0) throw Error(ErrorCode::kConfigError, "embedder dimension must be positive");
}

FixtureEmbedder FixtureEmbedder::from_file(const std::filesystem::path& path,
                                           std::string model_id, std::size_t dimension,
                                           std::uint64_t seed) {
  FixtureEmbedder embedder(std::move(model_id), dimension, seed);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open embedding fixture " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto fields = text::split(line, '\t');
    if (fields.size() != 4)
      throw Error(ErrorCode::kConfigError, path.string() + ":" + std::to_string(line_no) +
                                               ": expected 4 tab-separated fields");
    if (fields[1] != embedder.model_id_) continue;
    std::vector<double> values;
    for (const auto& component : text::split(fields[3], ',')) {
      auto v = text::parse_number(component);
      if (!v)
        throw Error(ErrorCode::kConfigError, path.string() + ":" + std::to_string(line_no) +
                                                 ": bad vector component '" + component + "'");
      values.push_back(*v);
    }
    embedder.set_vector(fields[0], parse_vector_kind(fields[2]), std::move(values));
  }
  return embedder;
}

void FixtureEmbedder::set_vector(std::string text, VectorKind kind, std::vector<double> values) {
  lookup_[{std::move(text), kind}] = std::move(values);
}

std::vector<double> FixtureEmbedder::hashed_vector(std::string_view feature) const {
  std::uint64_t state = hash::fnv1a64(feature) ^ seed_;
  std::vector<double> v(dimension_);
  for (auto& x : v) {
    // 53 random bits mapped onto [-1, 1).
    x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
  }
  return v;
}

StringEmbedding FixtureEmbedder::embed(std::string_view text) {
  auto tokens = word_tokens(text);
  if (tokens.empty()) tokens.emplace_back(text);

  std::vector<std::vector<double>> token_vectors;
  token_vectors.reserve(tokens.size());
  for (const auto& token : tokens) {
    std::vector<double> v = hashed_vector("tok:" + token);
    std::string padded = "#" + token + "#";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i)
      add_scaled(v, hashed_vector("tri:" + padded.substr(i, 3)), 0.5);
    token_vectors.push_back(std::move(v));
  }

  StringEmbedding out;
  out.mean_pooled.assign(dimension_, 0.0);
  out.max_pooled = token_vectors.front();
  for (const auto& v : token_vectors) {
    add_scaled(out.mean_pooled, v, 1.0 / static_cast<double>(token_vectors.size()));
    for (std::size_t i = 0; i < dimension_; ++i)
      out.max_pooled[i] = std::max(out.max_pooled[i], v[i]);
  }
  out.cls = out.mean_pooled;
  add_scaled(out.cls, hashed_vector("phrase:" + text::to_lower(text::collapse_whitespace(text))),
             kPhraseWeight);

  std::string key(text);
  for (auto [kind, target] : {std::pair{VectorKind::kCls, &out.cls},
                              std::pair{VectorKind::kMeanPooled, &out.mean_pooled},
                              std::pair{VectorKind::kMaxPooled, &out.max_pooled}}) {
    if (auto it = lookup_.find({key, kind}); it != lookup_.end()) *target = it->second;
  }
  return out;
}

}  // namespace termgraph::embed
