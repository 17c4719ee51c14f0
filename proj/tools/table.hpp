#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rwre/config.hpp"

namespace rwre::cli {

/// A cell: empty, integer, real, bool or text.
using Cell = std::variant<std::monostate, std::int64_t, double, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    row.resize(columns.size());
    rows.push_back(std::move(row));
  }
};

inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string cell_text(const Cell& c) {
  struct {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_real(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const { return v; }
  } visit;
  return std::visit(visit, c);
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline nlohmann::json cell_json(const Cell& c) {
  struct {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(std::int64_t v) const { return v; }
    nlohmann::json operator()(double v) const { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(format_real(v)); }
    nlohmann::json operator()(bool v) const { return v; }
    nlohmann::json operator()(const std::string& v) const { return v; }
  } visit;
  return std::visit(visit, c);
}

inline void write_table(std::ostream& os, const Table& t, OutputFormat f) {
  switch (f) {
    case OutputFormat::kCsv: {
      for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << csv_quote(t.columns[c]);
      os << '\n';
      for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_quote(cell_text(row[c]));
        os << '\n';
      }
      return;
    }
    case OutputFormat::kJsonLines: {
      for (const auto& row : t.rows) {
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t c = 0; c < row.size(); ++c) {
          if (!std::holds_alternative<std::monostate>(row[c])) obj[t.columns[c]] = cell_json(row[c]);
        }
        os << obj.dump() << '\n';
      }
      return;
    }
    case OutputFormat::kPretty: {
      std::vector<std::size_t> width(t.columns.size());
      for (std::size_t c = 0; c < t.columns.size(); ++c) width[c] = t.columns[c].size();
      for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], cell_text(row[c]).size());
      }
      auto line = [&](auto text_of) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
          const std::string s = text_of(c);
          os << s;
          if (c + 1 < t.columns.size()) os << std::string(width[c] - s.size() + 2, ' ');
        }
        os << '\n';
      };
      line([&](std::size_t c) { return t.columns[c]; });
      for (const auto& row : t.rows) line([&](std::size_t c) { return cell_text(row[c]); });
      return;
    }
  }
}

}  // namespace rwre::cli
