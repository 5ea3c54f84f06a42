#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qicloak/errors.hpp"

namespace qicloak::table {

// Column order of every emitted table. Cells may be absent (protocol does
// not use the quantity, or the oracle was off); absent means an empty CSV
// cell or a JSON null, never a fabricated zero.
inline constexpr std::array<const char*, 12> kColumns = {
    "N",          "n_th",        "eta",    "phi",  "G",        "chi",
    "snr_classical", "snr_quantum", "snr_jm", "ratio", "ratio_db",
    "oracle_discrepancy"};

inline constexpr std::size_t column_count = kColumns.size();

inline std::size_t column_index(const std::string& name) {
  for (std::size_t i = 0; i < kColumns.size(); ++i)
    if (name == kColumns[i]) return i;
  throw InvalidParameterError("unknown table column: " + name);
}

struct TableMetadata {
  std::string tool;
  std::string version;
  std::string protocol;
  double tolerance = 0.0;
  bool oracle = false;
  long side_cap = 0;
};

struct SweepRow {
  std::array<std::optional<double>, column_count> cells;

  std::optional<double>& operator[](const std::string& name) {
    return cells[column_index(name)];
  }
  const std::optional<double>& operator[](const std::string& name) const {
    return cells[column_index(name)];
  }
};

struct SweepTable {
  TableMetadata metadata;
  std::vector<SweepRow> rows;
};

// Shortest text that round-trips the double exactly would drop information
// for readers that parse fewer digits, so always print 17 significant ones.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void emit_csv(std::ostream& out, const SweepTable& t) {
  for (std::size_t i = 0; i < kColumns.size(); ++i)
    out << kColumns[i] << (i + 1 < kColumns.size() ? "," : "\n");
  for (const auto& row : t.rows)
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      if (row.cells[i]) out << format_double(*row.cells[i]);
      out << (i + 1 < row.cells.size() ? "," : "\n");
    }
}

inline void emit_json(std::ostream& out, const SweepTable& t) {
  nlohmann::ordered_json j;
  j["metadata"] = {{"tool", t.metadata.tool},
                   {"version", t.metadata.version},
                   {"protocol", t.metadata.protocol},
                   {"tolerance", t.metadata.tolerance},
                   {"oracle", t.metadata.oracle},
                   {"side_cap", t.metadata.side_cap}};
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r;
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      if (row.cells[i])
        r[kColumns[i]] = *row.cells[i];
      else
        r[kColumns[i]] = nullptr;
    }
    j["rows"].push_back(std::move(r));
  }
  out << j.dump(2) << '\n';
}

enum class TableFormat { Csv, Json };

inline TableFormat format_from_name(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "json") return TableFormat::Json;
  throw InvalidParameterError("unknown output format: " + name + " (use csv or json)");
}

inline void emit_table(std::ostream& out, const SweepTable& t, TableFormat f) {
  if (f == TableFormat::Csv)
    emit_csv(out, t);
  else
    emit_json(out, t);
}

}  // namespace qicloak::table
