#include <doctest.h>

#include "facetset/errors.hpp"
#include "facetset/sidecar.hpp"
#include "fake_sidecar.hpp"

using namespace facetset;
using namespace std::chrono_literals;

namespace {

SidecarEndpoint fake(const std::string& flags = "") {
  return SidecarEndpoint::parse(std::string("stdio:") + FAKE_SIDECAR + (flags.empty() ? "" : " " + flags));
}

}  // namespace

TEST_CASE("endpoint syntax") {
  const auto s = SidecarEndpoint::parse("stdio:python -m mlm --fast");
  CHECK(s.kind == SidecarEndpoint::Kind::stdio);
  CHECK(s.command == "python -m mlm --fast");

  const auto t = SidecarEndpoint::parse("tcp:example.org:7001");
  CHECK(t.kind == SidecarEndpoint::Kind::tcp);
  CHECK(t.host == "example.org");
  CHECK(t.port == 7001);
  CHECK(t.to_string() == "tcp:example.org:7001");

  const auto p = SidecarEndpoint::parse("tcp:9000");
  CHECK(p.host == "127.0.0.1");
  CHECK(p.port == 9000);

  CHECK_THROWS_AS(SidecarEndpoint::parse("http://x"), ConfigError);
  CHECK_THROWS_AS(SidecarEndpoint::parse("stdio:"), ConfigError);
  CHECK_THROWS_AS(SidecarEndpoint::parse("tcp:host:99999"), ConfigError);
  CHECK_THROWS_AS(SidecarEndpoint::parse("tcp:host:abc"), ConfigError);
}

TEST_CASE("slot text") {
  CHECK(slot_text("the big __ ran") == "the big [SLOT] ran");
  CHECK(slot_text("__ ran") == "[SLOT] ran");
  CHECK(slot_text("ate the __") == "ate the [SLOT]");
}

TEST_CASE("stdio handshake and scoring") {
  SidecarClient c(fake("--model tiny --max-top-k 3"), 5000ms);
  CHECK(c.model() == "tiny");
  CHECK(c.max_top_k() == 3);
  const std::vector<std::string> texts = {"a [SLOT] b", "c [SLOT] d"};
  const auto r = c.score(texts, 10);
  REQUIRE(r.size() == 2);
  for (const auto& d : r) {
    REQUIRE(d);
    // top_k is capped at the sidecar's maximum.
    REQUIRE(d->size() == 3);
    CHECK((*d)[0].first == "alpha");
    CHECK((*d)[0].second == doctest::Approx(0.5));
    CHECK((*d)[2].second == doctest::Approx(0.125));
  }
  CHECK(c.score({}, 5).empty());
}

TEST_CASE("replies are matched by id, not arrival order") {
  testing::FakeOptions opt;
  opt.fixture["one [SLOT]"] = {{"uno", 0.9}};
  opt.fixture["two [SLOT]"] = {{"dos", 0.8}};
  opt.fixture["three [SLOT]"] = {{"tres", 0.7}};
  const int port = testing::serve_tcp_once(opt);
  SidecarClient c(SidecarEndpoint::parse("tcp:127.0.0.1:" + std::to_string(port)), 5000ms);
  CHECK(c.model() == "fake-mlm");
  const std::vector<std::string> texts = {"one [SLOT]", "two [SLOT]", "three [SLOT]"};
  const auto r = c.score(texts, 5);
  REQUIRE(r.size() == 3);
  CHECK((*r[0])[0].first == "uno");
  CHECK((*r[1])[0].first == "dos");
  CHECK((*r[2])[0].first == "tres");
}

TEST_CASE("error replies come back empty without failing the batch") {
  SidecarClient c(fake(), 5000ms);
  const std::vector<std::string> texts = {"ok [SLOT]", "no slot here", "[SLOT] and [SLOT]", "fine [SLOT] too"};
  const auto r = c.score(texts, 2);
  CHECK(r[0]);
  CHECK_FALSE(r[1]);
  CHECK_FALSE(r[2]);
  CHECK(r[3]);
}

TEST_CASE("a hundred pipelined requests") {
  SidecarClient c(fake(), 5000ms);
  std::vector<std::string> texts;
  for (int i = 0; i < 100; ++i) texts.push_back("w" + std::to_string(i) + " [SLOT] x");
  const auto r = c.score(texts, 4);
  REQUIRE(r.size() == 100);
  for (const auto& d : r) CHECK((d && d->size() == 4));
}

TEST_CASE("misbehaving sidecars") {
  const std::vector<std::string> one = {"a [SLOT] b"};
  SUBCASE("garbage") {
    SidecarClient c(fake("--fault garbage"), 5000ms);
    CHECK_THROWS_AS(c.score(one, 3), ProtocolError);
  }
  SUBCASE("overfull") {
    SidecarClient c(fake("--fault overfull"), 5000ms);
    CHECK_THROWS_AS(c.score(one, 3), ProtocolError);
  }
  SUBCASE("unknown id") {
    SidecarClient c(fake("--fault unknown_id"), 5000ms);
    try {
      c.score(one, 3);
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK_FALSE(e.offending_line().empty());
    }
  }
  SUBCASE("bad ready") { CHECK_THROWS_AS(SidecarClient(fake("--fault bad_ready"), 5000ms), ProtocolError); }
  SUBCASE("closes after handshake") {
    SidecarClient c(fake("--fault close_early"), 5000ms);
    CHECK_THROWS_AS(c.score(one, 3), ScorerUnavailable);
  }
  SUBCASE("never answers") {
    SidecarClient c(fake("--fault hang"), 300ms);
    CHECK_THROWS_AS(c.score(one, 3), ScorerUnavailable);
  }
  SUBCASE("missing executable") {
    CHECK_THROWS_AS(SidecarClient(SidecarEndpoint::parse("stdio:/nonexistent/sidecar"), 2000ms),
                    ScorerUnavailable);
  }
  SUBCASE("nobody listening") {
    const int port = testing::serve_tcp_once({});
    // Consume the single accept, then the port is closed.
    { SidecarClient first(SidecarEndpoint::parse("tcp:" + std::to_string(port)), 2000ms); }
    CHECK_THROWS_AS(SidecarClient(SidecarEndpoint::parse("tcp:" + std::to_string(port)), 2000ms),
                    ScorerUnavailable);
  }
}
