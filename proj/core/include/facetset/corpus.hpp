#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace facetset {

// Stands in for the entity inside a skip-gram's canonical form.
inline constexpr std::string_view kSlotMarker = "__";

inline constexpr std::uint32_t kIndexFormatVersion = 1;

using EntityId = std::uint32_t;
using SkipGramId = std::uint32_t;

struct Document {
  std::uint64_t id = 0;
  std::vector<std::string> tokens;
};

// Lowercases ASCII, splits on anything that is not [a-z0-9_] or a non-ASCII
// UTF-8 byte, and trims underscores from token edges so a token can never
// collide with the slot marker. Underscore-joined multiword entities survive.
std::vector<std::string> tokenize(std::string_view line);

// A context window around one entity occurrence, entity removed.
struct SkipGram {
  std::vector<std::string> left;
  std::vector<std::string> right;

  // "left tokens __ right tokens", single spaces.
  std::string canonical() const;
  // Inverse of canonical(); throws FormatError unless exactly one slot marker.
  static SkipGram parse(std::string_view canonical);

  std::size_t size() const noexcept { return left.size() + right.size(); }
  bool operator==(const SkipGram&) const = default;
};

struct IndexConfig {
  std::size_t window = 2;
  std::uint64_t min_frequency = 3;
  std::vector<std::string> stop_words = default_stop_words();
  // Documents are split into this many shards and merged; the result is
  // identical to a single-shard build.
  std::size_t threads = 1;

  static std::vector<std::string> default_stop_words();
};

std::vector<std::string> load_stop_words(const std::filesystem::path& path);

struct Posting {
  std::uint32_t id = 0;
  std::uint64_t count = 0;
  bool operator==(const Posting&) const = default;
};

// Inverted maps between entities and their skip-gram contexts. Immutable
// once built; ids are assigned in lexicographic order of the entity string
// and of the skip-gram canonical form.
class CorpusIndex {
 public:
  CorpusIndex() = default;

  std::size_t window() const noexcept { return window_; }
  std::uint64_t min_frequency() const noexcept { return min_frequency_; }

  std::size_t entity_count() const noexcept { return entities_.size(); }
  std::size_t skipgram_count() const noexcept { return skipgrams_.size(); }
  std::uint64_t total_count() const noexcept { return total_count_; }

  std::optional<EntityId> find_entity(std::string_view name) const;
  const std::string& entity_name(EntityId id) const { return entities_.at(id); }
  std::uint64_t entity_frequency(EntityId id) const { return frequencies_.at(id); }

  std::optional<SkipGramId> find_skipgram(std::string_view canonical) const;
  const SkipGram& skipgram(SkipGramId id) const { return skipgrams_.at(id); }
  const std::string& canonical(SkipGramId id) const { return canonicals_.at(id); }
  bool stop_only(SkipGramId id) const { return stop_only_.at(id) != 0; }

  // entity -> (skip-gram id, count), sorted by skip-gram id.
  std::span<const Posting> contexts_of(EntityId id) const { return entity_to_sg_.at(id); }
  // skip-gram -> (entity id, count), sorted by entity id.
  std::span<const Posting> occupants_of(SkipGramId id) const { return sg_to_entity_.at(id); }

  bool operator==(const CorpusIndex& other) const;

 private:
  friend class IndexAssembler;

  void rebuild_lookups();

  std::size_t window_ = 0;
  std::uint64_t min_frequency_ = 0;
  std::uint64_t total_count_ = 0;
  std::vector<std::string> entities_;
  std::vector<std::uint64_t> frequencies_;
  std::vector<SkipGram> skipgrams_;
  std::vector<std::string> canonicals_;
  std::vector<std::uint8_t> stop_only_;
  std::vector<std::vector<Posting>> entity_to_sg_;
  std::vector<std::vector<Posting>> sg_to_entity_;
  std::unordered_map<std::string, EntityId> entity_lookup_;
  std::unordered_map<std::string, SkipGramId> skipgram_lookup_;
};

// Reads one document per line. Blank lines (after tokenization) are skipped.
// Throws EmptyCorpus if nothing remains, IoError (with line) on bad input.
CorpusIndex build_index(std::istream& in, const IndexConfig& config, const std::string& source = "<stream>");
CorpusIndex build_index(std::span<const std::string> lines, const IndexConfig& config);
CorpusIndex build_index_file(const std::filesystem::path& path, const IndexConfig& config);

struct SkipGramCount {
  SkipGramId id = 0;
  const SkipGram* skipgram = nullptr;
  std::uint64_t count = 0;
  bool stop_only = false;
};

// All contexts of an entity, descending count, ties by canonical form.
// Throws UnknownEntity.
std::vector<SkipGramCount> get_skipgrams(const CorpusIndex& index, std::string_view entity);

void save_index(const CorpusIndex& index, const std::filesystem::path& path);
CorpusIndex load_index(const std::filesystem::path& path);

// In-memory forms of the file format; save/load are thin wrappers.
std::string serialize_index(const CorpusIndex& index);
CorpusIndex deserialize_index(std::string_view bytes);

}  // namespace facetset
