// uelstat: command-line front end for the U-statistic EL tests.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uel/uel.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

int exit_code_for(uel::ErrorKind k) {
  using uel::ErrorKind;
  switch (k) {
    case ErrorKind::usage_error: return kUsage;
    case ErrorKind::invalid_argument:
    case ErrorKind::dimension_mismatch:
    case ErrorKind::missing_censor_flags:
    case ErrorKind::invalid_covariance:
    case ErrorKind::parse_error:
    case ErrorKind::schema_error:
    case ErrorKind::empty_group: return kData;
    default: return kNumeric;
  }
}

struct CommonOptions {
  std::string input;
  std::string delimiter = ",";
  std::string format = "table";
  std::string output;
  std::string ties = "strict";
  double alpha = 0.05;
  std::uint64_t seed = uel::WeightedChisqSettings{}.seed;
  std::size_t draws = uel::WeightedChisqSettings{}.draws;
  std::string group1 = "1";
  std::string group2 = "2";
};

char delimiter_of(const CommonOptions& o) {
  if (o.delimiter == "\\t" || o.delimiter == "tab") return '\t';
  if (o.delimiter.size() != 1) throw uel::Error(uel::ErrorKind::usage_error, "delimiter must be a single character");
  return o.delimiter.front();
}

uel::TiePolicy ties_of(const CommonOptions& o) {
  return o.ties == "half" ? uel::TiePolicy::half : uel::TiePolicy::strict;
}

uel::TestSettings settings_of(const CommonOptions& o) {
  uel::TestSettings s;
  s.mixture.draws = o.draws;
  s.mixture.seed = o.seed;
  return s;
}

nlohmann::json settings_json(const CommonOptions& o, const uel::TestSettings& s) {
  return {{"alpha", o.alpha},
          {"ties", o.ties},
          {"delimiter", std::string(1, delimiter_of(o))},
          {"residual_tol", s.solver.residual_tol},
          {"max_iterations", s.solver.max_iterations},
          {"feasibility_margin", s.solver.feasibility_margin},
          {"mixture_draws", s.mixture.draws},
          {"mixture_seed", s.mixture.seed}};
}

// Formats the whole report before anything is written.
void emit(const std::string& text, const std::string& output) {
  if (!output.empty()) {
    std::ofstream f(output, std::ios::binary);
    if (!f) throw uel::Error(uel::ErrorKind::usage_error, "cannot write '" + output + "'");
    f << text;
  }
  std::cout << text;
}

std::string render(const uel::ReportRecord& rec, const CommonOptions& o) {
  if (o.format == "record") return uel::emit_record(rec);
  const char d = delimiter_of(o);
  return std::visit(
      [&](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, uel::TestResult>) return uel::test_result_table(p, d);
        else if constexpr (std::is_same_v<T, uel::PipelineReport>) return uel::pipeline_table(p, d);
        else return uel::scenario_table(p, d, rec.include_runtime);
      },
      rec.payload);
}

uel::ReportRecord make_record(const std::string& command, const CommonOptions& o, const uel::TestSettings& s,
                              std::string_view input_bytes) {
  uel::ReportRecord rec;
  rec.command = command;
  rec.input_digest = uel::fnv1a_digest(input_bytes);
  rec.seed = o.seed;
  rec.settings = settings_json(o, s);
  return rec;
}

void add_output(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--delimiter", o.delimiter, "Field delimiter (single character, or 'tab')");
  sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"table", "record"}));
  sub->add_option("--output", o.output, "Also write the report to this file");
}

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("input", o.input, "Delimiter-separated data file")->required()->check(CLI::ExistingFile);
  add_output(sub, o);
  sub->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--seed", o.seed, "Seed for Monte-Carlo reference distributions");
  sub->add_option("--draws", o.draws, "Draws for the weighted chi-square reference")->check(CLI::Range(10000, 100000000));
}

void add_groups(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--group1", o.group1, "Label of group 1 in the group column");
  sub->add_option("--group2", o.group2, "Label of group 2 in the group column");
  sub->add_option("--ties", o.ties, "Tie policy")->check(CLI::IsMember({"strict", "half"}));
}

uel::TwoSampleSchema schema_of(const CommonOptions& o, uel::SampleSchema kind) {
  uel::TwoSampleSchema s;
  s.kind = kind;
  s.delimiter = delimiter_of(o);
  s.group1_label = o.group1;
  s.group2_label = o.group2;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-sample U-statistic empirical likelihood tests"};
  app.set_version_flag("--version", std::string(uel::kVersion));
  app.require_subcommand(1);

  CommonOptions opt;
  double null_value = 0.5;
  std::vector<double> null_vector;
  std::vector<std::string> markers;
  bool use_baselines = false;
  std::string units;
  std::vector<std::string> configs;
  std::optional<std::uint64_t> sim_seed;
  unsigned workers = 1;
  bool timing = false;
  std::string family = "normal_vs_normal";
  double target = 0.8;
  double censoring = 0.2;
  double shape1 = 1, scale1 = 1, shape2 = 1, scale2 = 1, arrival = 1;
  std::size_t n1 = 50, n2 = 50;

  auto* auc = app.add_subcommand("auc-test", "EL test of H0: AUC = null (file columns: group, value)");
  add_common(auc, opt);
  add_groups(auc, opt);
  auc->add_option("--null", null_value, "Null AUC")->check(CLI::Range(0.0, 1.0));

  auto* cmp = app.add_subcommand("auc-compare", "EL test of equal correlated AUCs (file columns: group, marker1, marker2)");
  add_common(cmp, opt);
  add_groups(cmp, opt);
  auto* cmp_null = cmp->add_option("--null", null_value, "Null difference of AUCs")->check(CLI::Range(-1.0, 1.0));
  cmp->add_option("--markers", markers, "The two marker columns")->expected(2)->delimiter(',');

  auto* geh = app.add_subcommand("gehan-test", "EL test of equal survival (file columns: group, time, censored)");
  add_common(geh, opt);
  add_groups(geh, opt);

  auto* mv = app.add_subcommand("mv-wmw-test", "EL test of a vector of WMW probabilities (file columns: group, markers...)");
  add_common(mv, opt);
  add_groups(mv, opt);
  mv->add_option("--null", null_vector, "Null probabilities, one per marker (default 0.5 each)")->delimiter(',');
  mv->add_option("--markers", markers, "Marker columns (default: all but the group column)")->delimiter(',');

  auto* cx = app.add_subcommand("crossover", "2x2 crossover pipeline (columns: subject_id, sequence, period, response)");
  add_common(cx, opt);
  cx->add_flag("--baselines", use_baselines, "Use baseline and washout measurements");
  cx->add_option("--units", units, "Response units");

  auto* sim = app.add_subcommand("simulate", "Run Monte-Carlo scenarios from a config file");
  add_output(sim, opt);
  sim->add_option("--config", configs, "Scenario config file(s)")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", sim_seed, "Override every scenario's seed");
  sim->add_option("--workers", workers, "Worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));
  sim->add_flag("--timing", timing, "Include wall-clock runtime in the report");

  auto* cal = app.add_subcommand("calibrate", "Print calibrated simulation quantities");
  cal->add_option("--family", family, "Scenario family");
  cal->add_option("--target", target, "Target AUC")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--censoring", censoring, "Target censoring proportion (weibull_survival)")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--shape1", shape1, "Weibull shape, group 1");
  cal->add_option("--scale1", scale1, "Weibull scale, group 1");
  cal->add_option("--shape2", shape2, "Weibull shape, group 2");
  cal->add_option("--scale2", scale2, "Weibull scale, group 2");
  cal->add_option("--arrival-rate", arrival, "Rate of the exponential entry process");
  cal->add_option("--n1", n1, "Group 1 size");
  cal->add_option("--n2", n2, "Group 2 size");
  add_output(cal, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (auc->parsed()) {
      const std::string bytes = uel::read_file(opt.input);
      std::istringstream in(bytes);
      const auto d = uel::parse_two_sample(in, schema_of(opt, uel::SampleSchema::univariate));
      const auto s = settings_of(opt);
      auto rec = make_record("auc-test", opt, s, bytes);
      rec.settings["null"] = null_value;
      rec.payload = uel::auc_el_test(d.group1.data(), d.group2.data(), null_value, ties_of(opt), s);
      emit(render(rec, opt), opt.output);
    } else if (cmp->parsed()) {
      if (!cmp_null->count()) null_value = 0.0;
      const std::string bytes = uel::read_file(opt.input);
      std::istringstream in(bytes);
      auto schema = schema_of(opt, uel::SampleSchema::multivariate);
      schema.marker_columns = markers;
      const auto d = uel::parse_two_sample(in, schema);
      if (d.group1.dim() != 2)
        throw uel::Error(uel::ErrorKind::schema_error, "auc-compare needs exactly two marker columns");
      const auto s = settings_of(opt);
      auto rec = make_record("auc-compare", opt, s, bytes);
      rec.settings["null"] = null_value;
      rec.payload = uel::correlated_auc_el_test(d.group1, d.group2, null_value, ties_of(opt), s);
      emit(render(rec, opt), opt.output);
    } else if (geh->parsed()) {
      const std::string bytes = uel::read_file(opt.input);
      std::istringstream in(bytes);
      const auto d = uel::parse_two_sample(in, schema_of(opt, uel::SampleSchema::survival));
      const auto s = settings_of(opt);
      auto rec = make_record("gehan-test", opt, s, bytes);
      rec.settings["null"] = 0.0;
      rec.payload = uel::gehan_el_test(d, s);
      emit(render(rec, opt), opt.output);
    } else if (mv->parsed()) {
      const std::string bytes = uel::read_file(opt.input);
      std::istringstream in(bytes);
      auto schema = schema_of(opt, uel::SampleSchema::multivariate);
      schema.marker_columns = markers;
      const auto d = uel::parse_two_sample(in, schema);
      if (null_vector.empty()) null_vector.assign(d.group1.dim(), 0.5);
      const auto s = settings_of(opt);
      auto rec = make_record("mv-wmw-test", opt, s, bytes);
      rec.settings["null"] = null_vector;
      rec.payload = uel::mv_wmw_el_test(d.group1, d.group2, null_vector, ties_of(opt), s);
      emit(render(rec, opt), opt.output);
    } else if (cx->parsed()) {
      const std::string bytes = uel::read_file(opt.input);
      std::istringstream in(bytes);
      const auto d = uel::parse_crossover(in, delimiter_of(opt), units);
      if (use_baselines && !d.has_baselines())
        throw uel::Error(uel::ErrorKind::schema_error, "--baselines given but the dataset has no baseline/washout rows");
      opt.ties = "half";
      const auto s = settings_of(opt);
      auto rec = make_record("crossover", opt, s, bytes);
      rec.settings["baselines"] = use_baselines;
      rec.settings["units"] = d.units;
      rec.payload = uel::run_pipeline(d, opt.alpha, s, use_baselines);
      emit(render(rec, opt), opt.output);
    } else if (sim->parsed()) {
      std::string bytes;
      std::vector<uel::ScenarioConfig> scenarios;
      for (const auto& path : configs) {
        const std::string text = uel::read_file(path);
        bytes += text;
        std::istringstream in(text);
        for (auto& c : uel::parse_scenarios(in)) scenarios.push_back(std::move(c));
      }
      std::vector<uel::ScenarioReport> reports;
      for (auto c : scenarios) {
        if (sim_seed) c.seed = *sim_seed;
        c.workers = workers;
        reports.push_back(uel::run_scenario(c));
      }
      uel::ReportRecord rec;
      rec.command = "simulate";
      rec.input_digest = uel::fnv1a_digest(bytes);
      if (sim_seed) rec.seed = *sim_seed;
      rec.settings = {{"delimiter", std::string(1, delimiter_of(opt))},
                      {"residual_tol", uel::SolverSettings{}.residual_tol},
                      {"max_iterations", uel::SolverSettings{}.max_iterations},
                      {"feasibility_margin", uel::SolverSettings{}.feasibility_margin}};
      rec.include_runtime = timing;
      rec.payload = std::move(reports);
      emit(render(rec, opt), opt.output);
    } else if (cal->parsed()) {
      const auto fam = uel::enum_from_string(uel::kFamilyNames, family, "family");
      nlohmann::json result{{"family", family}};
      std::string table = "quantity,value\n";
      if (fam == uel::Family::weibull_survival) {
        const double fu = uel::calibrate_censoring({shape1, scale1}, {shape2, scale2}, arrival, censoring, n1, n2);
        result["censoring_target"] = censoring;
        result["follow_up"] = uel::detail::number(fu);
        table += "follow_up," + uel::format_fixed6(fu) + "\n";
      } else if (uel::is_bivariate_auc_family(fam)) {
        const auto loc = uel::calibrate_marker_locations(fam, target);
        result["target_auc"] = target;
        result["location"] = {loc[0], loc[1]};
        table += "location_marker1," + uel::format_fixed6(loc[0]) + "\nlocation_marker2," +
                 uel::format_fixed6(loc[1]) + "\n";
      } else {
        const double mu = uel::calibrate_location(fam, target);
        result["target_auc"] = target;
        result["location"] = mu;
        table += "location," + uel::format_fixed6(mu) + "\n";
      }
      if (opt.format == "record") {
        nlohmann::json j{{"command", "calibrate"}, {"version", std::string(uel::kVersion)}, {"kind", "calibration"},
                         {"result", result}};
        emit(j.dump(2) + "\n", opt.output);
      } else {
        emit(table, opt.output);
      }
    }
  } catch (const uel::Error& e) {
    std::cerr << "uelstat: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "uelstat: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
