#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "qicloak/config.hpp"

using namespace qicloak;
using namespace qicloak::config;

namespace {
ConfigDocument parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}
}  // namespace

TEST_CASE("a full scenario file parses into the document") {
  const auto doc = parse(
      "# header comment\n"
      "protocol = jm_imperfect\n"
      "N = 0.1\n"
      "n_th = 1.5   # trailing comment\n"
      "eta = 0.9\n"
      "phi = 1.0\n"
      "G = 1.2\n"
      "chi = 0.8\n"
      "tolerance = 1e-4\n"
      "dim_cap = 8192\n"
      "oracle = off\n"
      "\n"
      "sweep.phi = 0.5, 1.0, 3.0\n"
      "sweep.N = 0.05,0.1\n");
  CHECK(doc.base.protocol == engine::Protocol::JmImperfect);
  CHECK(doc.base.params.N == 0.1);
  CHECK(doc.base.params.n_th == 1.5);
  CHECK(doc.base.params.G == 1.2);
  CHECK(doc.base.params.chi == 0.8);
  CHECK(doc.base.tolerance == 1e-4);
  CHECK(doc.base.side_cap == 8192);
  CHECK_FALSE(doc.base.oracle);
  CHECK(doc.has_G);
  CHECK(doc.has_protocol);
  REQUIRE(doc.axes.size() == 2);
  CHECK(doc.axes[0].name == "phi");
  CHECK(doc.axes[0].values == std::vector<double>{0.5, 1.0, 3.0});
  CHECK(doc.axes[1].name == "N");
}

TEST_CASE("config errors carry the key and one-based line") {
  try {
    parse("N = 0.1\neta = 1.4\n");
    FAIL("expected a throw");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "eta");
    CHECK(e.line() == 2);
  }

  try {
    parse("\n# comment only\nbogus_key = 3\n");
    FAIL("expected a throw");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "bogus_key");
    CHECK(e.line() == 3);
  }
}

TEST_CASE("malformed lines and values are rejected") {
  CHECK_THROWS_AS(parse("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse("N = banana\n"), ConfigError);
  CHECK_THROWS_AS(parse("N = 0.1 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse("N =\n"), ConfigError);
  CHECK_THROWS_AS(parse("oracle = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse("protocol = telepathy\n"), ConfigError);
  CHECK_THROWS_AS(parse("tolerance = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("dim_cap = 12.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("dim_cap = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse("N = 0.1\nN = 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse("sweep.eta = 0.5, 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("sweep.eta = \n"), ConfigError);
}

TEST_CASE("sweep values are validated against the parameter ranges") {
  try {
    parse("sweep.chi = 0.5, 2.0\n");
    FAIL("expected a throw");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "sweep.chi");
    CHECK(e.line() == 1);
  }
}

TEST_CASE("missing files surface as config errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/path/scenario.cfg"), ConfigError);
}

TEST_CASE("mixer protocols get a default gain unless one was pinned") {
  auto doc = parse("protocol = jm\nN = 0.4\n");
  apply_gain_default(doc);
  CHECK(doc.base.params.G == Catch::Approx(1.4));

  doc = parse("protocol = jm\nN = 1e-6\n");
  apply_gain_default(doc);
  CHECK(doc.base.params.G == Catch::Approx(1.001));

  doc = parse("protocol = jm\nN = 0.4\nG = 2.0\n");
  apply_gain_default(doc);
  CHECK(doc.base.params.G == 2.0);

  doc = parse("protocol = jm\nN = 0.4\nsweep.G = 1.5, 2.0\n");
  apply_gain_default(doc);
  CHECK(doc.base.params.G == 1.0);  // axis supplies the gain, base untouched

  doc = parse("protocol = quadrature\nN = 0.4\n");
  apply_gain_default(doc);
  CHECK(doc.base.params.G == 1.0);
}
