#include "facetset/corpus.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <zlib.h>

#include "facetset/errors.hpp"
#include "facetset/parallel.hpp"

namespace facetset {

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c >= 0x80;
}

// Returns false on malformed UTF-8 (bad lead byte, truncated or overlong
// sequence, surrogate).
bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && !is_token_byte(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && is_token_byte(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) {
      std::size_t b = i, e = j;
      while (b < e && line[b] == '_') ++b;
      while (e > b && line[e - 1] == '_') --e;
      if (e > b) {
        std::string tok(line.substr(b, e - b));
        for (auto& ch : tok)
          if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
        tokens.push_back(std::move(tok));
      }
    }
    i = j;
  }
  return tokens;
}

std::string SkipGram::canonical() const {
  std::string out = join(left);
  if (!out.empty()) out += ' ';
  out += kSlotMarker;
  if (!right.empty()) {
    out += ' ';
    out += join(right);
  }
  return out;
}

SkipGram SkipGram::parse(std::string_view canonical) {
  SkipGram sg;
  bool seen_slot = false;
  std::size_t i = 0;
  while (i < canonical.size()) {
    while (i < canonical.size() && canonical[i] == ' ') ++i;
    std::size_t j = i;
    while (j < canonical.size() && canonical[j] != ' ') ++j;
    if (j > i) {
      std::string_view tok = canonical.substr(i, j - i);
      if (tok == kSlotMarker) {
        if (seen_slot) throw FormatError("skip-gram has more than one slot marker", 1);
        seen_slot = true;
      } else {
        (seen_slot ? sg.right : sg.left).emplace_back(tok);
      }
    }
    i = j;
  }
  if (!seen_slot) throw FormatError("skip-gram has no slot marker", 1);
  if (sg.size() == 0) throw FormatError("skip-gram has no context tokens", 1);
  return sg;
}

std::vector<std::string> IndexConfig::default_stop_words() {
  return {"a",    "an",   "and",  "are",   "as",    "at",   "be",   "been", "but",  "by",   "for",
          "from", "had",  "has",  "have",  "he",    "her",  "his",  "i",    "if",   "in",   "into",
          "is",   "it",   "its",  "of",    "on",    "or",   "she",  "so",   "that", "the",  "their",
          "them", "then", "there", "these", "they", "this", "to",   "was",  "we",   "were", "which",
          "while", "who", "will", "with",  "would", "you"};
}

std::vector<std::string> load_stop_words(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open stop-word list");
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& tok : tokenize(line)) words.push_back(std::move(tok));
  }
  return words;
}

std::optional<EntityId> CorpusIndex::find_entity(std::string_view name) const {
  auto it = entity_lookup_.find(std::string(name));
  if (it == entity_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<SkipGramId> CorpusIndex::find_skipgram(std::string_view canonical) const {
  auto it = skipgram_lookup_.find(std::string(canonical));
  if (it == skipgram_lookup_.end()) return std::nullopt;
  return it->second;
}

bool CorpusIndex::operator==(const CorpusIndex& o) const {
  return window_ == o.window_ && min_frequency_ == o.min_frequency_ && total_count_ == o.total_count_ &&
         entities_ == o.entities_ && frequencies_ == o.frequencies_ && skipgrams_ == o.skipgrams_ &&
         stop_only_ == o.stop_only_ && entity_to_sg_ == o.entity_to_sg_ && sg_to_entity_ == o.sg_to_entity_;
}

void CorpusIndex::rebuild_lookups() {
  canonicals_.clear();
  canonicals_.reserve(skipgrams_.size());
  for (const auto& sg : skipgrams_) canonicals_.push_back(sg.canonical());
  entity_lookup_.clear();
  for (EntityId i = 0; i < entities_.size(); ++i) entity_lookup_.emplace(entities_[i], i);
  skipgram_lookup_.clear();
  for (SkipGramId i = 0; i < canonicals_.size(); ++i) skipgram_lookup_.emplace(canonicals_[i], i);

  sg_to_entity_.assign(skipgrams_.size(), {});
  total_count_ = 0;
  for (EntityId e = 0; e < entity_to_sg_.size(); ++e) {
    for (const auto& p : entity_to_sg_[e]) {
      sg_to_entity_[p.id].push_back({e, p.count});
      total_count_ += p.count;
    }
  }
}

// Turns raw documents into a CorpusIndex. Shards count independently over
// string keys; the merge sorts keys, so ids never depend on shard layout.
class IndexAssembler {
 public:
  static CorpusIndex assemble(const std::vector<Document>& docs, const IndexConfig& config) {
    if (config.window < 1) throw ConfigError("window must be >= 1");
    if (config.min_frequency < 1) throw ConfigError("min_frequency must be >= 1");
    if (docs.empty()) throw EmptyCorpus();

    const std::size_t shards = std::max<std::size_t>(1, std::min(config.threads, docs.size()));

    // Pass 1: token frequencies.
    std::vector<std::unordered_map<std::string, std::uint64_t>> shard_freq(shards);
    parallel_for(shards, shards, [&](std::size_t s) {
      for (std::size_t d = s; d < docs.size(); d += shards)
        for (const auto& t : docs[d].tokens) ++shard_freq[s][t];
    });
    std::map<std::string, std::uint64_t> freq;
    for (auto& part : shard_freq)
      for (auto& [tok, n] : part) freq[tok] += n;

    CorpusIndex index;
    index.window_ = config.window;
    index.min_frequency_ = config.min_frequency;
    for (const auto& [tok, n] : freq) {
      if (n >= config.min_frequency) {
        index.entities_.push_back(tok);
        index.frequencies_.push_back(n);
      }
    }
    std::unordered_map<std::string, EntityId> entity_ids;
    for (EntityId i = 0; i < index.entities_.size(); ++i) entity_ids.emplace(index.entities_[i], i);

    // Pass 2: skip-grams of every entity occurrence.
    using Counts = std::unordered_map<std::string, std::unordered_map<EntityId, std::uint64_t>>;
    std::vector<Counts> shard_counts(shards);
    parallel_for(shards, shards, [&](std::size_t s) {
      const auto w = static_cast<std::ptrdiff_t>(config.window);
      for (std::size_t d = s; d < docs.size(); d += shards) {
        const auto& toks = docs[d].tokens;
        const auto n = static_cast<std::ptrdiff_t>(toks.size());
        for (std::ptrdiff_t pos = 0; pos < n; ++pos) {
          auto eit = entity_ids.find(toks[pos]);
          if (eit == entity_ids.end()) continue;
          const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, pos - w);
          const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, pos + w + 1);
          if (hi - lo < 2) continue;
          SkipGram sg;
          sg.left.assign(toks.begin() + lo, toks.begin() + pos);
          sg.right.assign(toks.begin() + pos + 1, toks.begin() + hi);
          ++shard_counts[s][sg.canonical()][eit->second];
        }
      }
    });
    std::map<std::string, std::map<EntityId, std::uint64_t>> merged;
    for (auto& part : shard_counts)
      for (auto& [key, occ] : part) {
        auto& dst = merged[key];
        for (auto& [e, n] : occ) dst[e] += n;
      }

    const std::unordered_set<std::string> stop(config.stop_words.begin(), config.stop_words.end());
    index.entity_to_sg_.assign(index.entities_.size(), {});
    SkipGramId sid = 0;
    for (const auto& [key, occ] : merged) {
      SkipGram sg = SkipGram::parse(key);
      bool only_stop = true;
      for (const auto* side : {&sg.left, &sg.right})
        for (const auto& t : *side) only_stop = only_stop && stop.count(t) > 0;
      index.skipgrams_.push_back(std::move(sg));
      index.stop_only_.push_back(only_stop ? 1 : 0);
      for (const auto& [e, n] : occ) index.entity_to_sg_[e].push_back({sid, n});
      ++sid;
    }
    index.rebuild_lookups();
    return index;
  }

  static CorpusIndex from_parts(std::size_t window, std::uint64_t min_frequency, std::vector<std::string> entities,
                                std::vector<std::uint64_t> frequencies, std::vector<SkipGram> skipgrams,
                                std::vector<std::uint8_t> stop_only, std::vector<std::vector<Posting>> entity_to_sg) {
    CorpusIndex index;
    index.window_ = window;
    index.min_frequency_ = min_frequency;
    index.entities_ = std::move(entities);
    index.frequencies_ = std::move(frequencies);
    index.skipgrams_ = std::move(skipgrams);
    index.stop_only_ = std::move(stop_only);
    index.entity_to_sg_ = std::move(entity_to_sg);
    index.rebuild_lookups();
    return index;
  }

  static const CorpusIndex& view(const CorpusIndex& i) { return i; }
  static std::size_t window(const CorpusIndex& i) { return i.window_; }
  static const std::vector<std::string>& entities(const CorpusIndex& i) { return i.entities_; }
  static const std::vector<std::uint64_t>& frequencies(const CorpusIndex& i) { return i.frequencies_; }
  static const std::vector<SkipGram>& skipgrams(const CorpusIndex& i) { return i.skipgrams_; }
  static const std::vector<std::uint8_t>& stop_only(const CorpusIndex& i) { return i.stop_only_; }
  static const std::vector<std::vector<Posting>>& entity_to_sg(const CorpusIndex& i) { return i.entity_to_sg_; }
};

CorpusIndex build_index(std::span<const std::string> lines, const IndexConfig& config) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!valid_utf8(lines[i])) throw IoError("<lines>", "input is not valid UTF-8", i + 1);
    auto toks = tokenize(lines[i]);
    if (!toks.empty()) docs.push_back({docs.size(), std::move(toks)});
  }
  return IndexAssembler::assemble(docs, config);
}

CorpusIndex build_index(std::istream& in, const IndexConfig& config, const std::string& source) {
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!valid_utf8(line)) throw IoError(source, "input is not valid UTF-8", lineno);
    auto toks = tokenize(line);
    if (!toks.empty()) docs.push_back({docs.size(), std::move(toks)});
  }
  if (in.bad()) throw IoError(source, "read failed", lineno + 1);
  return IndexAssembler::assemble(docs, config);
}

CorpusIndex build_index_file(const std::filesystem::path& path, const IndexConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open corpus");
  return build_index(in, config, path.string());
}

std::vector<SkipGramCount> get_skipgrams(const CorpusIndex& index, std::string_view entity) {
  const auto id = index.find_entity(entity);
  if (!id) throw UnknownEntity(std::string(entity));
  std::vector<SkipGramCount> out;
  for (const auto& p : index.contexts_of(*id))
    out.push_back({p.id, &index.skipgram(p.id), p.count, index.stop_only(p.id)});
  std::sort(out.begin(), out.end(), [&](const SkipGramCount& a, const SkipGramCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return index.canonical(a.id) < index.canonical(b.id);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Binary container: magic, u32 version, payload, u32 crc32(all preceding).
// All integers little-endian.

namespace {

constexpr char kMagic[8] = {'F', 'S', 'E', 'T', 'I', 'D', 'X', '\0'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    auto p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  std::string str() {
    const auto n = u32();
    return std::string(take(n));
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view take(std::size_t n) {
    if (n > data_.size() - pos_) throw ChecksumError("index payload ends prematurely");
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string serialize_index(const CorpusIndex& index) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kIndexFormatVersion);
  w.u32(static_cast<std::uint32_t>(IndexAssembler::window(index)));
  w.u64(index.min_frequency());
  const auto& names = IndexAssembler::entities(index);
  const auto& freqs = IndexAssembler::frequencies(index);
  w.u64(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    w.str(names[i]);
    w.u64(freqs[i]);
  }
  const auto& sgs = IndexAssembler::skipgrams(index);
  const auto& stop = IndexAssembler::stop_only(index);
  w.u64(sgs.size());
  for (std::size_t i = 0; i < sgs.size(); ++i) {
    w.u32(static_cast<std::uint32_t>(sgs[i].left.size()));
    for (const auto& t : sgs[i].left) w.str(t);
    w.u32(static_cast<std::uint32_t>(sgs[i].right.size()));
    for (const auto& t : sgs[i].right) w.str(t);
    w.u8(stop[i]);
  }
  for (const auto& postings : IndexAssembler::entity_to_sg(index)) {
    w.u64(postings.size());
    for (const auto& p : postings) {
      w.u32(p.id);
      w.u64(p.count);
    }
  }
  const auto crc = crc_of(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

CorpusIndex deserialize_index(std::string_view bytes) {
  if (bytes.size() >= sizeof kMagic && std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw IncompatibleIndex("not a facetset index (bad magic bytes)");
  if (bytes.size() < sizeof kMagic + 8) throw ChecksumError("index file truncated");
  Reader header(bytes.substr(sizeof kMagic, 4));
  const auto version = header.u32();
  if (version != kIndexFormatVersion)
    throw IncompatibleIndex("index format version " + std::to_string(version) + ", expected " +
                            std::to_string(kIndexFormatVersion));
  const auto body = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4));
  if (crc_of(body) != tail.u32()) throw ChecksumError("index checksum mismatch (file corrupt or truncated)");

  Reader r(body.substr(sizeof kMagic + 4));
  const std::size_t window = r.u32();
  const std::uint64_t fmin = r.u64();
  const auto n_ent = r.u64();
  std::vector<std::string> names;
  std::vector<std::uint64_t> freqs;
  for (std::uint64_t i = 0; i < n_ent; ++i) {
    names.push_back(r.str());
    freqs.push_back(r.u64());
  }
  const auto n_sg = r.u64();
  std::vector<SkipGram> sgs;
  std::vector<std::uint8_t> stop;
  for (std::uint64_t i = 0; i < n_sg; ++i) {
    SkipGram sg;
    for (auto n = r.u32(); n > 0; --n) sg.left.push_back(r.str());
    for (auto n = r.u32(); n > 0; --n) sg.right.push_back(r.str());
    sgs.push_back(std::move(sg));
    stop.push_back(r.u8());
  }
  std::vector<std::vector<Posting>> e2s(n_ent);
  for (auto& postings : e2s) {
    for (auto n = r.u64(); n > 0; --n) {
      Posting p;
      p.id = r.u32();
      p.count = r.u64();
      if (p.id >= n_sg) throw ChecksumError("posting references unknown skip-gram");
      postings.push_back(p);
    }
  }
  if (!r.done()) throw ChecksumError("trailing bytes in index payload");
  return IndexAssembler::from_parts(window, fmin, std::move(names), std::move(freqs), std::move(sgs),
                                    std::move(stop), std::move(e2s));
}

void save_index(const CorpusIndex& index, const std::filesystem::path& path) {
  const auto bytes = serialize_index(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

CorpusIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open index");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path.string(), "read failed");
  return deserialize_index(ss.str());
}

}  // namespace facetset
