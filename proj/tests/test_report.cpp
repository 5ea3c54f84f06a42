#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "qicloak/table.hpp"

using namespace qicloak;
using namespace qicloak::table;

namespace {
SweepTable sample_table() {
  SweepTable t;
  t.metadata = {"qicloak", "0.1.0", "quadrature", 1e-5, true, 4096};
  SweepRow r1;
  r1["N"] = 0.1;
  r1["n_th"] = 1.0;
  r1["eta"] = 0.9;
  r1["phi"] = 0.5;
  r1["snr_classical"] = 0.25;
  r1["snr_quantum"] = 0.5;
  r1["ratio"] = 2.0;
  r1["ratio_db"] = 3.0103;
  SweepRow r2;
  r2["N"] = 0.2;
  t.rows = {r1, r2};
  return t;
}
}  // namespace

TEST_CASE("column list is the stable public interface") {
  REQUIRE(column_count == 12);
  const char* expected[] = {"N",       "n_th",          "eta",
                            "phi",     "G",             "chi",
                            "snr_classical", "snr_quantum",   "snr_jm",
                            "ratio",   "ratio_db",      "oracle_discrepancy"};
  for (size_t i = 0; i < column_count; ++i) CHECK(kColumns[i] == expected[i]);
  CHECK(column_index("ratio_db") == 10);
  CHECK_THROWS_AS(column_index("nope"), InvalidParameterError);
}

TEST_CASE("doubles round-trip through their text form") {
  for (double v : {0.1, 1.0 / 3.0, 1e-20, 6.02214076e23, -0.0, 1.0, 123456.0}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv output: one header, one line per row, empty means absent") {
  std::ostringstream out;
  emit_csv(out, sample_table());
  std::istringstream lines(out.str());
  std::string header, row1, row2, extra;
  REQUIRE(std::getline(lines, header));
  REQUIRE(std::getline(lines, row1));
  REQUIRE(std::getline(lines, row2));
  CHECK_FALSE(std::getline(lines, extra));
  CHECK(header ==
        "N,n_th,eta,phi,G,chi,snr_classical,snr_quantum,snr_jm,ratio,ratio_db,"
        "oracle_discrepancy");
  CHECK(row1.find(",,") != std::string::npos);  // G and chi are absent
  CHECK(row1.find("0.5,") != std::string::npos);
  // Second row has only N; every other cell must be empty.
  CHECK(row2 == format_double(0.2) + ",,,,,,,,,,,");
}

TEST_CASE("json output mirrors the table with nulls for absent cells") {
  std::ostringstream out;
  emit_json(out, sample_table());
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["metadata"]["tool"] == "qicloak");
  CHECK(j["metadata"]["protocol"] == "quadrature");
  CHECK(j["metadata"]["side_cap"] == 4096);
  REQUIRE(j["rows"].size() == 2);
  CHECK(j["rows"][0]["ratio"].get<double>() == Catch::Approx(2.0));
  CHECK(j["rows"][0]["G"].is_null());
  CHECK(j["rows"][1]["snr_quantum"].is_null());
  CHECK(j["rows"][1]["N"].get<double>() == Catch::Approx(0.2));
}

TEST_CASE("format selection by name") {
  std::ostringstream a, b;
  emit_table(a, sample_table(), format_from_name("csv"));
  emit_table(b, sample_table(), format_from_name("json"));
  CHECK(a.str().substr(0, 2) == "N,");
  CHECK(b.str().front() == '{');
  CHECK_THROWS_AS(format_from_name("xml"), InvalidParameterError);
}

TEST_CASE("row cells reject unknown column names") {
  SweepRow r;
  CHECK_THROWS_AS(r["bogus"] = 1.0, InvalidParameterError);
}
