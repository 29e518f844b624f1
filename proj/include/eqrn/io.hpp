#pragma once

// File formats: comma-separated tables, the dataset schema
// (time, response, covariate_1..p), key=value configuration files with
// sections, and the versioned text format of fitted models.

#include <chrono>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eqrn/eqrn.hpp"
#include "eqrn/qreg.hpp"
#include "eqrn/types.hpp"

namespace eqrn::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position or -1.
  Index column(const std::string& name) const;
  // Missing cells ("", "NA", "nan") become NaN when allowed, else DataError.
  Vector numeric(const std::string& name, bool allow_missing = false) const;
};

CsvTable read_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv(const std::string& path);
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);

// Shortest text that parses back to the same double; NaN prints as "NA".
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& context);

// ISO-8601 calendar dates (YYYY-MM-DD).
std::chrono::year_month_day parse_iso_date(const std::string& text);
std::string format_iso_date(std::chrono::year_month_day date);
std::string add_days(const std::string& iso_date, long days);
int calendar_year(const std::string& iso_date);

struct DatasetCsv {
  std::vector<std::string> time;  // empty when the file has no time column
  Vector response;
  Matrix covariates;  // p x n
  std::vector<std::string> covariate_names;

  bool has_time() const { return !time.empty(); }
  Index rows() const { return response.size(); }
  Dataset dataset() const { return {covariates, response}; }
  Series series() const { return {covariates, response}; }
  // Rows [begin, end).
  DatasetCsv slice(Index begin, Index end) const;
};

// Requires a `response` column; an optional `time` column must hold strictly
// increasing dates. Every other column is a covariate, in file order.
DatasetCsv read_dataset(const std::string& path);
DatasetCsv parse_dataset(const CsvTable& table, const std::string& source);
CsvTable dataset_table(const DatasetCsv& data);
void write_dataset(const std::string& path, const DatasetCsv& data);

// key=value lines, optional [section] headers (keys become "section.key"),
// '#' or ';' comments.
std::map<std::string, std::string> read_config(const std::string& path);
std::map<std::string, std::string> parse_config(std::istream& in);

inline constexpr int kModelFormatVersion = 1;

void write_model(std::ostream& out, const qreg::QuantileModel& model);
void write_model(std::ostream& out, const EqrnModel& model);
qreg::QuantileModel read_quantile_model(std::istream& in);
// The intermediate model is stored separately and left empty here.
EqrnModel read_eqrn_model(std::istream& in);

void save_model(const std::string& path, const qreg::QuantileModel& model);
void save_model(const std::string& path, const EqrnModel& model);
qreg::QuantileModel load_quantile_model(const std::string& path);
EqrnModel load_eqrn_model(const std::string& path);

}  // namespace eqrn::io
