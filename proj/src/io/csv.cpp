#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "eqrn/error.hpp"
#include "eqrn/io.hpp"

namespace eqrn::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) {
  std::string lower = trim(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower.empty() || lower == "na" || lower == "nan" || lower == "null";
}

std::string quote_if_needed(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Splits one record. Returns false while a quoted field is still open.
bool split_record(const std::string& text, std::vector<std::string>& cells) {
  cells.clear();
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c != '"') {
        cell += c;
      } else if (i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(trim(cell));
  return !quoted;
}

}  // namespace

Index CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<Index>(it - header.begin());
}

Vector CsvTable::numeric(const std::string& name, bool allow_missing) const {
  const Index c = column(name);
  if (c < 0) throw DataError("missing column '" + name + "'");
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string& cell = rows[r][static_cast<std::size_t>(c)];
    const std::string where = "row " + std::to_string(r + 2) + " column '" + name + "'";
    if (is_missing(cell)) {
      if (!allow_missing) throw DataError("missing value at " + where);
      out[static_cast<Index>(r)] = std::numeric_limits<double>::quiet_NaN();
    } else {
      out[static_cast<Index>(r)] = parse_double(cell, where);
    }
  }
  return out;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line, record;
  std::size_t line_no = 0, record_start = 0;
  bool have_header = false;
  std::vector<std::string> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (record.empty()) {
      if (trim(line).empty()) continue;
      record_start = line_no;
      record = line;
    } else {
      record += '\n' + line;
    }
    if (!split_record(record, cells)) continue;
    record.clear();
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError(source + ":" + std::to_string(record_start) + ": expected " + std::to_string(table.header.size()) +
                      " fields, found " + std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!record.empty()) {
    throw DataError(source + ":" + std::to_string(record_start) + ": malformed CSV line (unterminated quote)");
  }
  if (!have_header) throw DataError(source + ": empty file (header required)");
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in, path);
}

void write_csv(std::ostream& out, const CsvTable& table) {
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out << ',';
      out << quote_if_needed(row[k]);
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out, table);
  if (!out) throw DataError("error while writing '" + path + "'");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  const char* first = t.data();
  if (!t.empty() && t.front() == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw DataError("not a number: '" + text + "' at " + context);
  }
  if (!std::isfinite(v)) throw DataError("non-finite value '" + text + "' at " + context);
  return v;
}

std::chrono::year_month_day parse_iso_date(const std::string& text) {
  const std::string t = trim(text);
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (t.size() < 10 || t[4] != '-' || t[7] != '-' ||
      std::sscanf(t.substr(0, 10).c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw DataError("not an ISO-8601 date (YYYY-MM-DD): '" + text + "'");
  }
  // Accept a time-of-day suffix (YYYY-MM-DDThh:mm...) but use only the date.
  if (t.size() > 10 && t[10] != 'T' && t[10] != ' ') throw DataError("not an ISO-8601 date: '" + text + "'");
  const std::chrono::year_month_day date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw DataError("invalid calendar date '" + text + "'");
  return date;
}

std::string format_iso_date(std::chrono::year_month_day date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::string add_days(const std::string& iso_date, long days) {
  const std::chrono::sys_days base{parse_iso_date(iso_date)};
  return format_iso_date(std::chrono::year_month_day{base + std::chrono::days{days}});
}

int calendar_year(const std::string& iso_date) { return static_cast<int>(parse_iso_date(iso_date).year()); }

DatasetCsv DatasetCsv::slice(Index begin, Index end) const {
  if (begin < 0 || end > rows() || begin > end) throw DomainError("DatasetCsv::slice: bad range");
  DatasetCsv out;
  if (has_time()) out.time.assign(time.begin() + begin, time.begin() + end);
  out.response = response.segment(begin, end - begin);
  out.covariates = covariates.middleCols(begin, end - begin);
  out.covariate_names = covariate_names;
  return out;
}

DatasetCsv parse_dataset(const CsvTable& table, const std::string& source) {
  const Index time_col = table.column("time");
  if (table.column("response") < 0) throw DataError(source + ": missing 'response' column");
  if (table.rows.empty()) throw DataError(source + ": no data rows");
  DatasetCsv data;
  data.response = table.numeric("response");
  for (const auto& name : table.header) {
    if (name != "time" && name != "response") data.covariate_names.push_back(name);
  }
  data.covariates.resize(static_cast<Index>(data.covariate_names.size()), data.response.size());
  for (std::size_t k = 0; k < data.covariate_names.size(); ++k) {
    data.covariates.row(static_cast<Index>(k)) = table.numeric(data.covariate_names[k]).transpose();
  }
  if (time_col >= 0) {
    std::optional<std::chrono::sys_days> prev;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::string& cell = table.rows[r][static_cast<std::size_t>(time_col)];
      if (is_missing(cell)) throw DataError(source + ": missing time at row " + std::to_string(r + 2));
      const std::chrono::sys_days day{parse_iso_date(cell)};
      if (prev && day <= *prev) {
        throw DataError(source + ": time not strictly increasing at row " + std::to_string(r + 2));
      }
      prev = day;
      data.time.push_back(cell);
    }
  }
  return data;
}

DatasetCsv read_dataset(const std::string& path) { return parse_dataset(read_csv(path), path); }

CsvTable dataset_table(const DatasetCsv& data) {
  CsvTable table;
  if (data.has_time()) table.header.push_back("time");
  table.header.push_back("response");
  table.header.insert(table.header.end(), data.covariate_names.begin(), data.covariate_names.end());
  table.rows.reserve(static_cast<std::size_t>(data.rows()));
  for (Index i = 0; i < data.rows(); ++i) {
    std::vector<std::string> row;
    if (data.has_time()) row.push_back(data.time[static_cast<std::size_t>(i)]);
    row.push_back(format_double(data.response[i]));
    for (Index k = 0; k < data.covariates.rows(); ++k) row.push_back(format_double(data.covariates(k, i)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_dataset(const std::string& path, const DatasetCsv& data) { write_csv(path, dataset_table(data)); }

}  // namespace eqrn::io
