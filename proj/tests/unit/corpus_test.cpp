#include <doctest.h>

#include <random>
#include <sstream>

#include "facetset/corpus.hpp"
#include "facetset/errors.hpp"
#include "facetset/oracles/oracles.hpp"
#include "planted.hpp"

using namespace facetset;

namespace {

IndexConfig loose(std::size_t window = 2) {
  IndexConfig c;
  c.window = window;
  c.min_frequency = 1;
  return c;
}

std::map<std::string, std::uint64_t> contexts(const CorpusIndex& idx, const std::string& e) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& sg : get_skipgrams(idx, e)) out[sg.skipgram->canonical()] = sg.count;
  return out;
}

// Twenty lowercase documents; "paris" sits in seven of them.
std::vector<std::string> paris_corpus() {
  std::vector<std::string> docs;
  std::mt19937_64 rng(5);
  const std::vector<std::string> filler = {"river", "bridge", "museum", "louvre", "tower", "cafe", "metro", "night"};
  for (int d = 0; d < 20; ++d) {
    std::string line;
    const int len = 4 + static_cast<int>(rng() % 5);
    const int at = d < 7 ? static_cast<int>(rng() % static_cast<unsigned>(len)) : -1;
    for (int k = 0; k < len; ++k) {
      if (k) line += ' ';
      line += k == at ? std::string("paris") : filler[rng() % filler.size()];
    }
    docs.push_back(line);
  }
  return docs;
}

}  // namespace

TEST_CASE("tokenizer lowercases, splits on punctuation and keeps joined multiwords") {
  CHECK(tokenize("The Quick, brown-fox!") == std::vector<std::string>{"the", "quick", "brown", "fox"});
  CHECK(tokenize("new_york is big") == std::vector<std::string>{"new_york", "is", "big"});
  CHECK(tokenize("__ _x_ __init__") == std::vector<std::string>{"x", "init"});
  CHECK(tokenize("caf\xc3\xa9 ol\xc3\xa9") == std::vector<std::string>{"caf\xc3\xa9", "ol\xc3\xa9"});
  CHECK(tokenize("  \t ").empty());
}

TEST_CASE("skip-gram canonical form round-trips") {
  SkipGram sg{{"the", "big"}, {"ran"}};
  CHECK(sg.canonical() == "the big __ ran");
  CHECK(SkipGram::parse("the big __ ran") == sg);
  CHECK(SkipGram::parse("__ ran").left.empty());
  CHECK_THROWS_AS(SkipGram::parse("a __ b __ c"), FormatError);
  CHECK_THROWS_AS(SkipGram::parse("a b"), FormatError);
  CHECK_THROWS_AS(SkipGram::parse("__"), FormatError);
}

TEST_CASE("width-1 context of a single document") {
  const std::vector<std::string> docs = {"the quick brown fox"};
  const auto idx = build_index(docs, loose(1));
  const auto sgs = get_skipgrams(idx, "quick");
  REQUIRE(sgs.size() == 1);
  CHECK(sgs[0].skipgram->canonical() == "the __ brown");
  CHECK(sgs[0].count == 1);
}

TEST_CASE("document boundaries give asymmetric contexts") {
  const std::vector<std::string> docs = {"alpha beta gamma"};
  const auto idx = build_index(docs, loose(2));
  CHECK(contexts(idx, "alpha") == std::map<std::string, std::uint64_t>{{"__ beta gamma", 1}});
  CHECK(contexts(idx, "gamma") == std::map<std::string, std::uint64_t>{{"alpha beta __", 1}});
  CHECK(contexts(idx, "beta") == std::map<std::string, std::uint64_t>{{"alpha __ gamma", 1}});
}

TEST_CASE("absent entity is UnknownEntity") {
  const std::vector<std::string> docs = {"pears and plums"};
  const auto idx = build_index(docs, loose());
  CHECK_THROWS_AS(get_skipgrams(idx, "apple"), UnknownEntity);
}

TEST_CASE("min_frequency filters the entity vocabulary") {
  const std::vector<std::string> docs = {"a b c", "b c d", "c d e"};
  IndexConfig cfg = loose();
  cfg.min_frequency = 3;
  const auto idx = build_index(docs, cfg);
  CHECK(idx.entity_count() == 1);
  CHECK(idx.find_entity("c"));
  CHECK_FALSE(idx.find_entity("b"));
}

TEST_CASE("contexts agree with a linear scan of the raw text") {
  const auto docs = paris_corpus();
  const auto idx = build_index(docs, loose());
  const auto expected = oracles::scan_contexts(docs, "paris", 2);
  CHECK(contexts(idx, "paris") == expected);

  std::uint64_t total = 0;
  for (const auto& [_, n] : expected) total += n;
  CHECK(total == 7);

  const auto pid = *idx.find_entity("paris");
  std::uint64_t forward = 0, backward = 0;
  for (const auto& p : idx.contexts_of(pid)) forward += p.count;
  for (SkipGramId s = 0; s < idx.skipgram_count(); ++s)
    for (const auto& p : idx.occupants_of(s))
      if (p.id == pid) backward += p.count;
  CHECK(forward == 7);
  CHECK(backward == 7);
}

TEST_CASE("get_skipgrams sorts by count then canonical form") {
  const std::vector<std::string> docs = {"x kiwi y", "x kiwi y", "x kiwi y", "p kiwi q", "b kiwi c", "a kiwi c"};
  const auto idx = build_index(docs, loose(1));
  const auto sgs = get_skipgrams(idx, "kiwi");
  REQUIRE(sgs.size() == 4);
  CHECK(sgs[0].skipgram->canonical() == "x __ y");
  CHECK(sgs[0].count == 3);
  CHECK(sgs[1].skipgram->canonical() == "a __ c");
  CHECK(sgs[2].skipgram->canonical() == "b __ c");
  CHECK(sgs[3].skipgram->canonical() == "p __ q");
}

TEST_CASE("planted ambiguous entity has one skip-gram per planted context") {
  std::vector<std::string> docs;
  const std::vector<std::string> fruit = {"ripe red", "sweet juicy", "fresh green", "baked warm", "sliced tart"};
  const std::vector<std::string> company = {"shares of", "ceo of", "stock in", "products by", "buy from"};
  for (const auto& f : fruit) docs.push_back(f + " apple pie today");
  for (const auto& c : company) docs.push_back(c + " apple inc yesterday");
  const auto idx = build_index(docs, loose());
  const auto expected = oracles::scan_contexts(docs, "apple", 2);
  CHECK(expected.size() == 10);
  CHECK(contexts(idx, "apple") == expected);
}

TEST_CASE("transpose invariant and verbatim reconstruction on a planted corpus") {
  const auto pc = testing::generate(testing::fig1_spec());
  const auto idx = build_index(pc.lines, IndexConfig{});

  std::uint64_t fwd = 0, bwd = 0;
  std::map<std::pair<EntityId, SkipGramId>, std::uint64_t> pairs;
  for (EntityId e = 0; e < idx.entity_count(); ++e)
    for (const auto& p : idx.contexts_of(e)) {
      fwd += p.count;
      pairs[{e, p.id}] = p.count;
    }
  for (SkipGramId s = 0; s < idx.skipgram_count(); ++s)
    for (const auto& p : idx.occupants_of(s)) {
      bwd += p.count;
      CHECK(pairs[{p.id, s}] == p.count);
    }
  CHECK(fwd == bwd);
  CHECK(fwd == idx.total_count());

  // Every beijing context, with beijing put back, occurs in some document.
  std::vector<std::string> normalized;
  for (const auto& l : pc.lines) {
    std::string s;
    for (const auto& t : tokenize(l)) s += " " + t;
    normalized.push_back(s + " ");
  }
  for (const auto& sg : get_skipgrams(idx, "beijing")) {
    auto text = " " + sg.skipgram->canonical() + " ";
    text.replace(text.find(" __ "), 4, " beijing ");
    const bool found = std::any_of(normalized.begin(), normalized.end(),
                                   [&](const std::string& d) { return d.find(text) != std::string::npos; });
    CHECK_MESSAGE(found, text);
  }
}

TEST_CASE("stop-word-only skip-grams are flagged") {
  const std::vector<std::string> docs = {"of the kiwi and the", "green kiwi fruit"};
  const auto idx = build_index(docs, loose());
  for (const auto& sg : get_skipgrams(idx, "kiwi")) {
    if (sg.skipgram->canonical() == "of the __ and the") CHECK(sg.stop_only);
    if (sg.skipgram->canonical() == "green __ fruit") CHECK_FALSE(sg.stop_only);
  }
}

TEST_CASE("empty and invalid corpora") {
  const std::vector<std::string> blank = {"", "  ", "!!!"};
  CHECK_THROWS_AS(build_index(blank, loose()), EmptyCorpus);

  std::istringstream bad("fine line\nbroken \xff byte\n");
  try {
    build_index(bad, loose(), "bad.txt");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("bad.txt:2") != std::string::npos);
  }
  CHECK_THROWS_AS(build_index_file("/nonexistent/corpus.txt", loose()), IoError);
}

TEST_CASE("sharded build equals the sequential build") {
  const auto pc = testing::generate(testing::apple_amazon_spec());
  IndexConfig one;
  IndexConfig four;
  four.threads = 4;
  const auto a = build_index(pc.lines, one);
  const auto b = build_index(pc.lines, four);
  CHECK(a == b);
  CHECK(serialize_index(a) == serialize_index(b));
  CHECK(serialize_index(a) == serialize_index(build_index(pc.lines, one)));
}

TEST_CASE("index file round trip and corruption") {
  const auto pc = testing::generate(testing::poseidon_spec());
  const auto idx = build_index(pc.lines, IndexConfig{});
  testing::TempDir dir;
  const auto path = dir / "idx.bin";
  save_index(idx, path);
  const auto back = load_index(path);
  CHECK(back == idx);
  CHECK(serialize_index(back) == serialize_index(idx));
  CHECK(get_skipgrams(back, "poseidon").size() == get_skipgrams(idx, "poseidon").size());

  const std::string bytes = serialize_index(idx);

  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_index(magic), IncompatibleIndex);

  std::string version = bytes;
  version[8] = static_cast<char>(kIndexFormatVersion + 1);
  CHECK_THROWS_AS(deserialize_index(version), IncompatibleIndex);

  CHECK_THROWS_AS(deserialize_index(bytes.substr(0, bytes.size() / 2)), ChecksumError);
  CHECK_THROWS_AS(deserialize_index(bytes.substr(0, 10)), ChecksumError);

  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x20;
  CHECK_THROWS_AS(deserialize_index(flipped), ChecksumError);

  testing::write_file(dir / "trunc.bin", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_index(dir / "trunc.bin"), ChecksumError);
  CHECK_THROWS_AS(load_index(dir / "missing.bin"), IoError);
}

TEST_CASE("stop-word list file") {
  testing::TempDir dir;
  testing::write_file(dir / "stop.txt", "The\nof\n\nAND\n");
  CHECK(load_stop_words(dir / "stop.txt") == std::vector<std::string>{"the", "of", "and"});
  CHECK_THROWS_AS(load_stop_words(dir / "none.txt"), IoError);
}
