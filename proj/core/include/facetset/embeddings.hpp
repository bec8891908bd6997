#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "facetset/corpus.hpp"

namespace facetset {

// Word -> dense vector, all of one dimension. Words are stored lowercased to
// agree with the corpus tokenizer. Vectors are kept exactly as loaded.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  // Rows dropped because the word had already been seen.
  std::size_t duplicates() const noexcept { return duplicates_; }

  // Returns false (and counts a duplicate) if the word is already present.
  // Throws DimensionError on a length mismatch, FormatError on NaN/Inf.
  bool add(std::string_view word, std::span<const double> vec);

  std::optional<std::span<const double>> find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

 private:
  std::size_t dim_;
  std::size_t duplicates_ = 0;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

// Whitespace-separated text vectors with an optional "count dim" header.
// Paths ending in ".gz" are read through zlib.
EmbeddingTable load_embeddings(const std::filesystem::path& path, std::optional<std::size_t> expected_dim = {});
EmbeddingTable parse_embeddings(std::string_view text, std::optional<std::size_t> expected_dim = {});

struct SgEmbedding {
  std::vector<double> vector;
  std::size_t support = 0;
};

// Mean of the context-token vectors found in the table. The slot marker and
// OOV tokens are skipped; nullopt when nothing is found.
std::optional<SgEmbedding> embed_skipgram(const EmbeddingTable& table, const SkipGram& sg);

}  // namespace facetset
