#pragma once

// Input parsing (delimited files, scenario configs) and report emission
// (fixed-notation tables and a JSON record that round-trips).

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "uel/baselines.hpp"
#include "uel/crossover.hpp"
#include "uel/error.hpp"
#include "uel/hypothesis_tests.hpp"
#include "uel/kernels.hpp"
#include "uel/sim.hpp"

namespace uel {

inline constexpr std::string_view kVersion = "0.1.0";

// --- delimited text ---------------------------------------------------------

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct TableRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Header plus data rows; blank lines and lines starting with '#' are skipped.
struct DelimitedTable {
  std::vector<std::string> header;
  std::vector<TableRow> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    return std::nullopt;
  }
  std::size_t require(std::string_view name) const {
    if (auto k = column(name)) return *k;
    throw Error(ErrorKind::schema_error, "missing column '" + std::string(name) + "'");
  }
};

inline DelimitedTable read_delimited(std::istream& in, char delimiter = ',') {
  DelimitedTable t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto fields = split(body, delimiter);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw Error(ErrorKind::parse_error, "line " + std::to_string(lineno) + ": expected " +
                                              std::to_string(t.header.size()) + " fields, found " +
                                              std::to_string(fields.size()));
    t.rows.push_back({lineno, std::move(fields)});
  }
  if (!have_header) throw Error(ErrorKind::schema_error, "input has no header row");
  return t;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::parse_error, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline double parse_number(std::string_view text, std::size_t line, std::string_view column) {
  const std::string s(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": column '" + std::string(column) +
                                            "' is not a finite number: '" + s + "'");
  return v;
}

/// 64-bit FNV-1a digest, printed as 16 hex digits.
inline std::string fnv1a_digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- two-sample files -------------------------------------------------------

enum class SampleSchema { univariate, multivariate, survival };

struct TwoSampleSchema {
  SampleSchema kind = SampleSchema::univariate;
  char delimiter = ',';
  std::string group_column = "group";
  std::string group1_label = "1";
  std::string group2_label = "2";
  std::string value_column = "value";                // univariate
  std::vector<std::string> marker_columns;           // multivariate; empty = every non-group column
  std::string time_column = "time";                  // survival
  std::string censor_column = "censored";            // survival, 1 = censored
};

inline TwoSampleData parse_two_sample(std::istream& in, const TwoSampleSchema& schema = {}) {
  const auto table = read_delimited(in, schema.delimiter);
  const std::size_t g = table.require(schema.group_column);
  std::vector<std::size_t> value_cols;
  std::vector<std::string> value_names;
  std::optional<std::size_t> censor_col;
  switch (schema.kind) {
    case SampleSchema::univariate: value_names = {schema.value_column}; break;
    case SampleSchema::survival:
      value_names = {schema.time_column};
      censor_col = table.require(schema.censor_column);
      break;
    case SampleSchema::multivariate:
      value_names = schema.marker_columns;
      if (value_names.empty())
        for (const auto& h : table.header)
          if (h != schema.group_column) value_names.push_back(h);
      if (value_names.empty()) throw Error(ErrorKind::schema_error, "no marker columns");
      break;
  }
  for (const auto& n : value_names) value_cols.push_back(table.require(n));

  std::vector<double> v1, v2;
  std::vector<int> c1, c2;
  for (const auto& row : table.rows) {
    const auto& label = row.fields[g];
    int which = 0;
    if (label == schema.group1_label) which = 1;
    else if (label == schema.group2_label) which = 2;
    else
      throw Error(ErrorKind::parse_error, "line " + std::to_string(row.line) + ": unknown group '" + label +
                                              "' (expected '" + schema.group1_label + "' or '" +
                                              schema.group2_label + "')");
    auto& vals = which == 1 ? v1 : v2;
    for (std::size_t k = 0; k < value_cols.size(); ++k)
      vals.push_back(parse_number(row.fields[value_cols[k]], row.line, value_names[k]));
    if (censor_col) {
      const auto& f = row.fields[*censor_col];
      if (f != "0" && f != "1")
        throw Error(ErrorKind::parse_error, "line " + std::to_string(row.line) + ": censor flag must be 0 or 1, got '" +
                                                f + "'");
      (which == 1 ? c1 : c2).push_back(f == "1" ? 1 : 0);
    }
  }
  if (v1.empty()) throw Error(ErrorKind::empty_group, "group '" + schema.group1_label + "' has no rows");
  if (v2.empty()) throw Error(ErrorKind::empty_group, "group '" + schema.group2_label + "' has no rows");
  const std::size_t p = value_cols.size();
  TwoSampleData d{Sample(p, std::move(v1)), Sample(p, std::move(v2)), std::nullopt, std::nullopt};
  if (censor_col) {
    d.censor1 = std::move(c1);
    d.censor2 = std::move(c2);
  }
  return d;
}

inline TwoSampleData parse_two_sample(const std::string& path, const TwoSampleSchema& schema = {}) {
  std::istringstream in(read_file(path));
  return parse_two_sample(in, schema);
}

// --- crossover files --------------------------------------------------------

/// Long format: subject_id, sequence (AB|BA), period (baseline|1|washout|2), response.
inline CrossoverDataset parse_crossover(std::istream& in, char delimiter = ',', std::string units = {}) {
  const auto table = read_delimited(in, delimiter);
  const std::size_t cid = table.require("subject_id");
  const std::size_t cseq = table.require("sequence");
  const std::size_t cper = table.require("period");
  const std::size_t cresp = table.require("response");

  struct Partial {
    int seq = 0;
    std::size_t first_line = 0;
    std::optional<double> y1, y2, base, wash;
  };
  std::vector<std::string> order;
  std::map<std::string, Partial> subjects;
  for (const auto& row : table.rows) {
    const auto& id = row.fields[cid];
    if (id.empty()) throw Error(ErrorKind::parse_error, "line " + std::to_string(row.line) + ": empty subject_id");
    const auto& seq_text = row.fields[cseq];
    int seq = 0;
    if (seq_text == "AB") seq = 1;
    else if (seq_text == "BA") seq = 2;
    else
      throw Error(ErrorKind::parse_error,
                  "line " + std::to_string(row.line) + ": sequence must be AB or BA, got '" + seq_text + "'");
    const double value = parse_number(row.fields[cresp], row.line, "response");
    auto [it, inserted] = subjects.try_emplace(id);
    auto& s = it->second;
    if (inserted) {
      order.push_back(id);
      s.seq = seq;
      s.first_line = row.line;
    } else if (s.seq != seq) {
      throw Error(ErrorKind::parse_error,
                  "line " + std::to_string(row.line) + ": subject '" + id + "' appears in both sequences");
    }
    const auto& period = row.fields[cper];
    std::optional<double>* slot = nullptr;
    if (period == "1") slot = &s.y1;
    else if (period == "2") slot = &s.y2;
    else if (period == "baseline") slot = &s.base;
    else if (period == "washout") slot = &s.wash;
    else
      throw Error(ErrorKind::parse_error, "line " + std::to_string(row.line) +
                                              ": period must be baseline, 1, washout or 2, got '" + period + "'");
    if (slot->has_value())
      throw Error(ErrorKind::parse_error, "line " + std::to_string(row.line) + ": duplicate period '" + period +
                                              "' for subject '" + id + "'");
    *slot = value;
  }

  CrossoverDataset d;
  d.units = std::move(units);
  for (const auto& id : order) {
    const auto& s = subjects.at(id);
    if (!s.y1 || !s.y2)
      throw Error(ErrorKind::parse_error, "line " + std::to_string(s.first_line) + ": subject '" + id +
                                              "' lacks a period-1 or period-2 response");
    CrossoverSubject r{id, *s.y1, *s.y2, s.base, s.wash};
    (s.seq == 1 ? d.seq1 : d.seq2).push_back(std::move(r));
  }
  if (d.seq1.empty()) throw Error(ErrorKind::empty_group, "sequence AB has no subjects");
  if (d.seq2.empty()) throw Error(ErrorKind::empty_group, "sequence BA has no subjects");
  d.validate();
  return d;
}

inline CrossoverDataset parse_crossover(const std::string& path, char delimiter = ',', std::string units = {}) {
  std::istringstream in(read_file(path));
  return parse_crossover(in, delimiter, std::move(units));
}

// --- numeric formatting -----------------------------------------------------

/// Fixed notation carrying six significant digits.
inline std::string format_fixed6(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  int decimals = 5;
  if (x != 0.0) decimals = std::max(0, 5 - static_cast<int>(std::floor(std::log10(std::abs(x)))));
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

inline std::string join(const std::vector<std::string>& fields, char delimiter) {
  std::string out;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out += delimiter;
    out += fields[k];
  }
  return out;
}

inline std::string join_numbers(std::span<const double> v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ' ';
    out += format_fixed6(v[k]);
  }
  return out;
}

// --- scenario config files --------------------------------------------------
//
//   [scenario]
//   name = auc_null
//   family = normal_vs_normal
//   n1 = 50
//   ...
//   [parameters]
//   target_auc = 0.5
//   cov_x = 4, 1.5; 1.5, 2.25
//
// A file may hold several scenarios; each [scenario] header starts a new one
// and the sections below it ([parameters], [parameters.weibull1],
// [parameters.weibull2]) apply to it.

namespace detail {

inline bool parse_bool(std::string_view v, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": expected a boolean, got '" +
                                          std::string(v) + "'");
}

inline std::uint64_t parse_unsigned(std::string_view v, std::size_t line, std::string_view key) {
  const std::string s(v);
  char* end = nullptr;
  errno = 0;
  const unsigned long long x = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s.front() == '-' || end != s.c_str() + s.size() || errno == ERANGE)
    throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": '" + std::string(key) +
                                            "' must be a non-negative integer, got '" + s + "'");
  return x;
}

inline std::vector<double> parse_vector(std::string_view v, std::size_t line, std::string_view key) {
  std::vector<double> out;
  for (const auto& f : split(v, ',')) out.push_back(parse_number(f, line, key));
  return out;
}

inline Matrix parse_matrix(std::string_view v, std::size_t line, std::string_view key) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : split(v, ';')) rows.push_back(parse_vector(r, line, key));
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols())
      throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": ragged matrix for '" +
                                              std::string(key) + "'");
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

inline std::string format_full(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_matrix(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ", ";
      out += format_full(m(i, j));
    }
  }
  return out;
}

inline void apply_scenario_key(ScenarioConfig& c, std::string_view key, std::string_view v, std::size_t line) {
  auto num = [&] { return parse_number(v, line, key); };
  auto uns = [&] { return parse_unsigned(v, line, key); };
  if (key == "name") c.name = std::string(v);
  else if (key == "family") c.family = enum_from_string(kFamilyNames, v, "family");
  else if (key == "test") c.test = enum_from_string(kProcedureNames, v, "test");
  else if (key == "n1") c.n1 = uns();
  else if (key == "n2") c.n2 = uns();
  else if (key == "replications") c.replications = uns();
  else if (key == "alpha") c.alpha = num();
  else if (key == "seed") c.seed = uns();
  else if (key == "ties") {
    if (v == "strict") c.ties = TiePolicy::strict;
    else if (v == "half") c.ties = TiePolicy::half;
    else throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": ties must be strict or half");
  } else if (key == "mixture_draws") c.mixture_draws = uns();
  else if (key == "workers") c.workers = static_cast<unsigned>(uns());
  else if (key == "collect_statistics") c.collect_statistics = parse_bool(v, line);
  else if (key == "baselines") {
    c.baselines.clear();
    for (const auto& b : split(v, ','))
      if (!b.empty()) c.baselines.push_back(enum_from_string(kBaselineNames, b, "baseline"));
  } else
    throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": unknown scenario key '" +
                                            std::string(key) + "'");
}

inline void apply_parameter_key(ScenarioParameters& p, std::string_view key, std::string_view v, std::size_t line) {
  auto num = [&] { return parse_number(v, line, key); };
  if (key == "target_auc") p.target_auc = num();
  else if (key == "shift") p.shift = num();
  else if (key == "location") p.location = num();
  else if (key == "censoring_target") p.censoring_target = num();
  else if (key == "arrival_rate") p.arrival_rate = num();
  else if (key == "follow_up") p.follow_up = num();
  else if (key == "cov_x") p.cov_x = parse_matrix(v, line, key);
  else if (key == "cov_y") p.cov_y = parse_matrix(v, line, key);
  else if (key == "mean_y") p.mean_y = parse_vector(v, line, key);
  else if (key == "log_scale") p.log_scale = parse_bool(v, line);
  else if (key == "mu") p.mu = num();
  else if (key == "gamma") p.gamma = num();
  else if (key == "period_effect") p.period_effect = num();
  else if (key == "tau") p.tau = num();
  else if (key == "theta") p.theta = num();
  else if (key == "noise_sd") p.noise_sd = num();
  else if (key == "crossover_baselines") p.crossover_baselines = parse_bool(v, line);
  else if (key == "pi_baseline") p.pi_baseline = num();
  else if (key == "pi_washout") p.pi_washout = num();
  else if (key == "carryover_first_order") p.carryover_first_order = num();
  else
    throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": unknown parameter '" +
                                            std::string(key) + "'");
}

}  // namespace detail

inline std::vector<ScenarioConfig> parse_scenarios(std::istream& in) {
  std::vector<ScenarioConfig> out;
  std::string section;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto body = trim(raw);
    if (body.empty() || body.front() == '#' || body.front() == ';') continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": bad section header");
      section = std::string(trim(body.substr(1, body.size() - 2)));
      if (section == "scenario") out.emplace_back();
      else if (section != "parameters" && section != "parameters.weibull1" && section != "parameters.weibull2")
        throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": unknown section '" + section + "'");
      else if (out.empty())
        throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": section before any [scenario]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": expected key = value");
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    if (out.empty()) throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": key before any [scenario]");
    auto& c = out.back();
    if (section == "scenario") {
      try {
        detail::apply_scenario_key(c, key, value, line);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::invalid_argument) throw;
        throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": " + e.what());
      }
    } else if (section == "parameters") {
      detail::apply_parameter_key(c.params, key, value, line);
    } else {
      auto& w = section == "parameters.weibull1" ? c.params.weibull1 : c.params.weibull2;
      if (key == "shape") w.shape = parse_number(value, line, key);
      else if (key == "scale") w.scale = parse_number(value, line, key);
      else throw Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": unknown Weibull key");
    }
  }
  if (out.empty()) throw Error(ErrorKind::schema_error, "config holds no [scenario] section");
  for (const auto& c : out) {
    try {
      c.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::schema_error, "scenario '" + c.name + "': " + e.what());
    }
  }
  return out;
}

inline std::vector<ScenarioConfig> parse_scenarios(const std::string& path) {
  std::istringstream in(read_file(path));
  return parse_scenarios(in);
}

/// Writes a config in the same format parse_scenarios reads.
inline std::string emit_scenario(const ScenarioConfig& c) {
  std::ostringstream o;
  const auto& p = c.params;
  o << "[scenario]\n"
    << "name = " << c.name << "\n"
    << "family = " << to_string(c.family) << "\n";
  if (c.test) o << "test = " << to_string(*c.test) << "\n";
  o << "n1 = " << c.n1 << "\nn2 = " << c.n2 << "\nreplications = " << c.replications << "\n"
    << "alpha = " << detail::format_full(c.alpha) << "\nseed = " << c.seed << "\n";
  if (c.ties) o << "ties = " << to_string(*c.ties) << "\n";
  o << "mixture_draws = " << c.mixture_draws << "\nworkers = " << c.workers << "\n"
    << "collect_statistics = " << (c.collect_statistics ? "true" : "false") << "\n";
  if (!c.baselines.empty()) {
    std::vector<std::string> names;
    for (auto b : c.baselines) names.emplace_back(to_string(b));
    o << "baselines = " << join(names, ',') << "\n";
  }
  o << "[parameters]\n"
    << "target_auc = " << detail::format_full(p.target_auc) << "\n"
    << "shift = " << detail::format_full(p.shift) << "\n";
  if (p.location) o << "location = " << detail::format_full(*p.location) << "\n";
  o << "censoring_target = " << detail::format_full(p.censoring_target) << "\n"
    << "arrival_rate = " << detail::format_full(p.arrival_rate) << "\n";
  if (p.follow_up) o << "follow_up = " << detail::format_full(*p.follow_up) << "\n";
  o << "cov_x = " << detail::format_matrix(p.cov_x) << "\n"
    << "cov_y = " << detail::format_matrix(p.cov_y) << "\n";
  o << "mean_y = ";
  for (std::size_t k = 0; k < p.mean_y.size(); ++k) o << (k ? ", " : "") << detail::format_full(p.mean_y[k]);
  o << "\nlog_scale = " << (p.log_scale ? "true" : "false") << "\n"
    << "mu = " << detail::format_full(p.mu) << "\ngamma = " << detail::format_full(p.gamma) << "\n"
    << "period_effect = " << detail::format_full(p.period_effect) << "\ntau = " << detail::format_full(p.tau)
    << "\ntheta = " << detail::format_full(p.theta) << "\nnoise_sd = " << detail::format_full(p.noise_sd) << "\n"
    << "crossover_baselines = " << (p.crossover_baselines ? "true" : "false") << "\n"
    << "pi_baseline = " << detail::format_full(p.pi_baseline) << "\npi_washout = "
    << detail::format_full(p.pi_washout) << "\ncarryover_first_order = "
    << detail::format_full(p.carryover_first_order) << "\n"
    << "[parameters.weibull1]\nshape = " << detail::format_full(p.weibull1.shape)
    << "\nscale = " << detail::format_full(p.weibull1.scale) << "\n"
    << "[parameters.weibull2]\nshape = " << detail::format_full(p.weibull2.shape)
    << "\nscale = " << detail::format_full(p.weibull2.scale) << "\n";
  return o.str();
}

// --- JSON records -----------------------------------------------------------

using nlohmann::json;

namespace detail {

// JSON has no NaN or infinity; they travel as strings.
inline json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double number_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::parse_error, "expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

inline json numbers(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline std::vector<double> numbers_from(const json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number_from(x));
  return out;
}

inline json matrix_json(const Matrix& m) {
  json a = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(number(m(i, j)));
    a.push_back(std::move(r));
  }
  return a;
}

inline Matrix matrix_from(const json& j) {
  Matrix m(j.size(), j.empty() ? 0 : j.front().size());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) = number_from(j.at(i).at(k));
  return m;
}

inline Reference reference_from(std::string_view s) {
  for (auto r : {Reference::chi1, Reference::weighted_chisq, Reference::normal, Reference::chisq})
    if (to_string(r) == s) return r;
  throw Error(ErrorKind::parse_error, "unknown reference '" + std::string(s) + "'");
}

inline Conclusion conclusion_from(std::string_view s) {
  for (auto c : {Conclusion::no_treatment_effect, Conclusion::treatment_effect_both_periods,
                 Conclusion::treatment_effect_first_period_only})
    if (to_string(c) == s) return c;
  throw Error(ErrorKind::parse_error, "unknown conclusion '" + std::string(s) + "'");
}

}  // namespace detail

inline json to_json(const TestResult& r) {
  json j;
  j["estimate"] = detail::numbers(r.estimate);
  j["null_value"] = detail::numbers(r.null_value);
  j["log_el_ratio"] = detail::number(r.log_el_ratio);
  j["scaled_statistic"] = detail::number(r.scaled_statistic);
  j["reference"] = std::string(to_string(r.reference));
  j["reference_dof"] = r.reference_dof;
  j["mixture_weights"] = detail::numbers(r.mixture.weights);
  j["p_value"] = detail::number(r.p_value);
  json d;
  d["iterations"] = r.diagnostics.iterations;
  d["residual_norm"] = detail::number(r.diagnostics.residual_norm);
  d["lambda"] = detail::numbers(r.diagnostics.lambda);
  d["variances"] = detail::numbers(r.diagnostics.variances);
  d["degenerate"] = r.diagnostics.degenerate;
  d["note"] = r.diagnostics.note;
  j["diagnostics"] = std::move(d);
  return j;
}

inline TestResult test_result_from_json(const json& j) {
  TestResult r;
  r.estimate = detail::numbers_from(j.at("estimate"));
  r.null_value = detail::numbers_from(j.at("null_value"));
  r.log_el_ratio = detail::number_from(j.at("log_el_ratio"));
  r.scaled_statistic = detail::number_from(j.at("scaled_statistic"));
  r.reference = detail::reference_from(j.at("reference").get<std::string>());
  r.reference_dof = j.at("reference_dof").get<int>();
  r.mixture.weights = detail::numbers_from(j.at("mixture_weights"));
  r.p_value = detail::number_from(j.at("p_value"));
  const auto& d = j.at("diagnostics");
  r.diagnostics.iterations = d.at("iterations").get<int>();
  r.diagnostics.residual_norm = detail::number_from(d.at("residual_norm"));
  r.diagnostics.lambda = detail::numbers_from(d.at("lambda"));
  r.diagnostics.variances = detail::numbers_from(d.at("variances"));
  r.diagnostics.degenerate = d.at("degenerate").get<bool>();
  r.diagnostics.note = d.at("note").get<std::string>();
  return r;
}

inline json to_json(const PipelineReport& p) {
  json j;
  j["alpha"] = p.alpha;
  j["with_baselines"] = p.with_baselines;
  j["multiplicity_adjusted"] = p.multiplicity_adjusted;
  j["final_conclusion"] = std::string(to_string(p.final_conclusion));
  json steps = json::array();
  for (const auto& s : p.steps) steps.push_back({{"hypothesis", s.hypothesis}, {"reject", s.reject}, {"result", to_json(s.result)}});
  j["steps"] = std::move(steps);
  return j;
}

inline PipelineReport pipeline_report_from_json(const json& j) {
  PipelineReport p;
  p.alpha = j.at("alpha").get<double>();
  p.with_baselines = j.at("with_baselines").get<bool>();
  p.multiplicity_adjusted = j.at("multiplicity_adjusted").get<bool>();
  p.final_conclusion = detail::conclusion_from(j.at("final_conclusion").get<std::string>());
  for (const auto& s : j.at("steps"))
    p.steps.push_back({s.at("hypothesis").get<std::string>(), test_result_from_json(s.at("result")),
                       s.at("reject").get<bool>()});
  return p;
}

/// Config echo; the worker count is left out because it cannot affect results.
inline json to_json(const ScenarioConfig& c) {
  const auto& p = c.params;
  json params{
      {"target_auc", detail::number(p.target_auc)},
      {"shift", detail::number(p.shift)},
      {"censoring_target", detail::number(p.censoring_target)},
      {"arrival_rate", detail::number(p.arrival_rate)},
      {"weibull1", {{"shape", detail::number(p.weibull1.shape)}, {"scale", detail::number(p.weibull1.scale)}}},
      {"weibull2", {{"shape", detail::number(p.weibull2.shape)}, {"scale", detail::number(p.weibull2.scale)}}},
      {"cov_x", detail::matrix_json(p.cov_x)},
      {"cov_y", detail::matrix_json(p.cov_y)},
      {"mean_y", detail::numbers(p.mean_y)},
      {"log_scale", p.log_scale},
      {"mu", detail::number(p.mu)},
      {"gamma", detail::number(p.gamma)},
      {"period_effect", detail::number(p.period_effect)},
      {"tau", detail::number(p.tau)},
      {"theta", detail::number(p.theta)},
      {"noise_sd", detail::number(p.noise_sd)},
      {"crossover_baselines", p.crossover_baselines},
      {"pi_baseline", detail::number(p.pi_baseline)},
      {"pi_washout", detail::number(p.pi_washout)},
      {"carryover_first_order", detail::number(p.carryover_first_order)},
  };
  if (p.location) params["location"] = detail::number(*p.location);
  if (p.follow_up) params["follow_up"] = detail::number(*p.follow_up);
  json baselines = json::array();
  for (auto b : c.baselines) baselines.push_back(std::string(to_string(b)));
  json j{{"name", c.name},
         {"family", std::string(to_string(c.family))},
         {"test", std::string(to_string(c.procedure()))},
         {"n1", c.n1},
         {"n2", c.n2},
         {"replications", c.replications},
         {"alpha", detail::number(c.alpha)},
         {"seed", c.seed},
         {"ties", std::string(to_string(c.tie_policy()))},
         {"mixture_draws", c.mixture_draws},
         {"collect_statistics", c.collect_statistics},
         {"baselines", std::move(baselines)},
         {"parameters", std::move(params)}};
  return j;
}

inline ScenarioConfig scenario_config_from_json(const json& j) {
  ScenarioConfig c;
  c.name = j.at("name").get<std::string>();
  c.family = enum_from_string(kFamilyNames, j.at("family").get<std::string>(), "family");
  c.test = enum_from_string(kProcedureNames, j.at("test").get<std::string>(), "test");
  c.n1 = j.at("n1").get<std::size_t>();
  c.n2 = j.at("n2").get<std::size_t>();
  c.replications = j.at("replications").get<std::size_t>();
  c.alpha = detail::number_from(j.at("alpha"));
  c.seed = j.at("seed").get<std::uint64_t>();
  c.ties = j.at("ties").get<std::string>() == "half" ? TiePolicy::half : TiePolicy::strict;
  c.mixture_draws = j.at("mixture_draws").get<std::size_t>();
  c.collect_statistics = j.at("collect_statistics").get<bool>();
  for (const auto& b : j.at("baselines")) c.baselines.push_back(enum_from_string(kBaselineNames, b.get<std::string>(), "baseline"));
  const auto& p = j.at("parameters");
  auto& q = c.params;
  q.target_auc = detail::number_from(p.at("target_auc"));
  q.shift = detail::number_from(p.at("shift"));
  if (p.contains("location")) q.location = detail::number_from(p.at("location"));
  q.censoring_target = detail::number_from(p.at("censoring_target"));
  q.arrival_rate = detail::number_from(p.at("arrival_rate"));
  if (p.contains("follow_up")) q.follow_up = detail::number_from(p.at("follow_up"));
  q.weibull1 = {detail::number_from(p.at("weibull1").at("shape")), detail::number_from(p.at("weibull1").at("scale"))};
  q.weibull2 = {detail::number_from(p.at("weibull2").at("shape")), detail::number_from(p.at("weibull2").at("scale"))};
  q.cov_x = detail::matrix_from(p.at("cov_x"));
  q.cov_y = detail::matrix_from(p.at("cov_y"));
  q.mean_y = detail::numbers_from(p.at("mean_y"));
  q.log_scale = p.at("log_scale").get<bool>();
  q.mu = detail::number_from(p.at("mu"));
  q.gamma = detail::number_from(p.at("gamma"));
  q.period_effect = detail::number_from(p.at("period_effect"));
  q.tau = detail::number_from(p.at("tau"));
  q.theta = detail::number_from(p.at("theta"));
  q.noise_sd = detail::number_from(p.at("noise_sd"));
  q.crossover_baselines = p.at("crossover_baselines").get<bool>();
  q.pi_baseline = detail::number_from(p.at("pi_baseline"));
  q.pi_washout = detail::number_from(p.at("pi_washout"));
  q.carryover_first_order = detail::number_from(p.at("carryover_first_order"));
  return c;
}

/// Serialized scenario report; runtime is included only on request so that
/// reports of the same seed compare byte for byte.
inline json to_json(const ScenarioReport& r, bool include_runtime = false) {
  json methods = json::array();
  for (const auto& m : r.methods)
    methods.push_back({{"method", m.method},
                       {"rejections", m.rejections},
                       {"completed", m.completed},
                       {"failures", m.failures},
                       {"rejection_rate", detail::number(m.rejection_rate)},
                       {"monte_carlo_se", detail::number(m.monte_carlo_se)},
                       {"failure_fraction", detail::number(m.failure_fraction)}});
  json j{{"config", to_json(r.config)},
         {"replications_completed", r.replications_completed},
         {"location", detail::numbers(r.location)},
         {"methods", std::move(methods)}};
  if (r.follow_up) j["follow_up"] = detail::number(*r.follow_up);
  if (r.realized_censoring) j["realized_censoring"] = detail::number(*r.realized_censoring);
  if (!r.el_statistics.empty()) j["el_statistics"] = detail::numbers(r.el_statistics);
  if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

inline ScenarioReport scenario_report_from_json(const json& j) {
  ScenarioReport r;
  r.config = scenario_config_from_json(j.at("config"));
  r.replications_completed = j.at("replications_completed").get<std::size_t>();
  const auto loc = detail::numbers_from(j.at("location"));
  if (loc.size() != 2) throw Error(ErrorKind::parse_error, "location must have 2 entries");
  r.location = {loc[0], loc[1]};
  for (const auto& m : j.at("methods"))
    r.methods.push_back({m.at("method").get<std::string>(), m.at("rejections").get<std::size_t>(),
                         m.at("completed").get<std::size_t>(), m.at("failures").get<std::size_t>(),
                         detail::number_from(m.at("rejection_rate")), detail::number_from(m.at("monte_carlo_se")),
                         detail::number_from(m.at("failure_fraction"))});
  if (j.contains("follow_up")) r.follow_up = detail::number_from(j.at("follow_up"));
  if (j.contains("realized_censoring")) r.realized_censoring = detail::number_from(j.at("realized_censoring"));
  if (j.contains("el_statistics")) r.el_statistics = detail::numbers_from(j.at("el_statistics"));
  if (j.contains("runtime_seconds")) r.runtime_seconds = j.at("runtime_seconds").get<double>();
  return r;
}

using ReportPayload = std::variant<TestResult, PipelineReport, std::vector<ScenarioReport>>;

/// Everything a run produced, with enough context to reproduce it.
struct ReportRecord {
  std::string command;                   // subcommand name
  std::string input_digest;              // FNV-1a of the input file bytes
  std::string version{kVersion};
  std::optional<std::uint64_t> seed;
  json settings = json::object();        // tolerances, draws, alpha, ties, ...
  ReportPayload payload;
  bool include_runtime = false;
};

inline json to_json(const ReportRecord& r) {
  json j{{"command", r.command}, {"input_digest", r.input_digest}, {"version", r.version}, {"settings", r.settings}};
  j["seed"] = r.seed ? json(*r.seed) : json(nullptr);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TestResult>) {
          j["kind"] = "test";
          j["result"] = to_json(p);
        } else if constexpr (std::is_same_v<T, PipelineReport>) {
          j["kind"] = "pipeline";
          j["result"] = to_json(p);
        } else {
          j["kind"] = "simulation";
          json a = json::array();
          for (const auto& s : p) a.push_back(to_json(s, r.include_runtime));
          j["result"] = std::move(a);
        }
      },
      r.payload);
  return j;
}

inline ReportRecord report_record_from_json(const json& j) {
  ReportRecord r;
  r.command = j.at("command").get<std::string>();
  r.input_digest = j.at("input_digest").get<std::string>();
  r.version = j.at("version").get<std::string>();
  if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
  r.settings = j.at("settings");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "test") {
    r.payload = test_result_from_json(j.at("result"));
  } else if (kind == "pipeline") {
    r.payload = pipeline_report_from_json(j.at("result"));
  } else if (kind == "simulation") {
    std::vector<ScenarioReport> v;
    for (const auto& s : j.at("result")) {
      v.push_back(scenario_report_from_json(s));
      r.include_runtime = r.include_runtime || s.contains("runtime_seconds");
    }
    r.payload = std::move(v);
  } else {
    throw Error(ErrorKind::parse_error, "unknown record kind '" + kind + "'");
  }
  return r;
}

inline std::string emit_record(const ReportRecord& r) { return to_json(r).dump(2) + "\n"; }

inline ReportRecord parse_record(std::string_view text) {
  try {
    return report_record_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("malformed report record: ") + e.what());
  }
}

// --- tables -----------------------------------------------------------------

inline std::string test_result_table(const TestResult& r, char delimiter = ',') {
  std::vector<std::vector<std::string>> rows{
      {"field", "value"},
      {"estimate", join_numbers(r.estimate)},
      {"null_value", join_numbers(r.null_value)},
      {"log_el_ratio", format_fixed6(r.log_el_ratio)},
      {"statistic", format_fixed6(r.scaled_statistic)},
      {"reference", std::string(to_string(r.reference))},
      {"p_value", format_fixed6(r.p_value)},
      {"iterations", std::to_string(r.diagnostics.iterations)},
      {"residual_norm", format_fixed6(r.diagnostics.residual_norm)},
  };
  if (r.reference == Reference::weighted_chisq) rows.push_back({"mixture_weights", join_numbers(r.mixture.weights)});
  if (r.reference == Reference::chisq) rows.push_back({"reference_dof", std::to_string(r.reference_dof)});
  if (!r.diagnostics.note.empty()) rows.push_back({"note", r.diagnostics.note});
  std::string out;
  for (const auto& row : rows) out += join(row, delimiter) + "\n";
  return out;
}

inline std::string pipeline_table(const PipelineReport& p, char delimiter = ',') {
  std::string out = join({"step", "hypothesis", "statistic", "p_value", "decision"}, delimiter) + "\n";
  for (std::size_t k = 0; k < p.steps.size(); ++k) {
    const auto& s = p.steps[k];
    out += join({std::to_string(k + 1), s.hypothesis, format_fixed6(s.result.scaled_statistic),
                 format_fixed6(s.result.p_value), s.reject ? "reject" : "retain"},
                delimiter) +
           "\n";
  }
  out += join({"conclusion", std::string(to_string(p.final_conclusion)), "", "", ""}, delimiter) + "\n";
  return out;
}

inline std::string scenario_table(const std::vector<ScenarioReport>& reports, char delimiter = ',',
                                  bool include_runtime = false) {
  std::vector<std::string> head{"scenario", "family", "test", "method", "n1", "n2", "replications",
                                "completed", "failures", "rejection_rate", "monte_carlo_se", "failure_fraction"};
  if (include_runtime) head.push_back("runtime_seconds");
  std::string out = join(head, delimiter) + "\n";
  for (const auto& r : reports)
    for (const auto& m : r.methods) {
      std::vector<std::string> row{r.config.name,
                                   std::string(to_string(r.config.family)),
                                   std::string(to_string(r.config.procedure())),
                                   m.method,
                                   std::to_string(r.config.n1),
                                   std::to_string(r.config.n2),
                                   std::to_string(r.config.replications),
                                   std::to_string(m.completed),
                                   std::to_string(m.failures),
                                   format_fixed6(m.rejection_rate),
                                   format_fixed6(m.monte_carlo_se),
                                   format_fixed6(m.failure_fraction)};
      if (include_runtime) row.push_back(format_fixed6(r.runtime_seconds));
      out += join(row, delimiter) + "\n";
    }
  return out;
}

}  // namespace uel
