#include "compatkit/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <ostream>

#include "compatkit/experiment.hpp"
#include "compatkit/log_io.hpp"
#include "compatkit/report_io.hpp"

namespace compatkit::cli {

namespace {

const std::vector<std::string>& known_rules() {
  static const std::vector<std::string> rules = {"max_delta_nfr", "max_delta_pct_nfr", "max_nfr", "min_delta_acc",
                                                 "max_delta_m_r"};
  return rules;
}

Threshold make_threshold(const std::string& rule, double value) {
  if (std::find(known_rules().begin(), known_rules().end(), rule) == known_rules().end()) {
    std::string valid;
    for (const auto& r : known_rules()) valid += (valid.empty() ? "" : ", ") + r;
    throw ConfigError("thresholds", "unknown rule '" + rule + "' (valid: " + valid + ")");
  }
  return {rule, value};
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Reads a log and collects parse-time and invariant issues.
ParsedLog load_checked(const std::filesystem::path& path) {
  auto parsed = read_log(path);
  auto issues = validate_log(parsed.records);
  parsed.issues.insert(parsed.issues.end(), issues.begin(), issues.end());
  return parsed;
}

void print_issues(const std::vector<ValidationIssue>& issues, std::ostream& err) {
  for (const auto& i : issues) err << "invalid record '" << i.instance_id << "': " << i.reason << '\n';
}

}  // namespace

std::vector<Threshold> parse_thresholds(const std::string& spec) {
  std::vector<Threshold> out;
  if (spec.empty()) return out;
  if (std::filesystem::is_regular_file(spec)) {
    const auto j = read_json(spec);
    if (!j.is_object()) throw ConfigError("thresholds", "threshold file must hold a JSON object");
    for (const auto& [rule, value] : j.items()) {
      if (!value.is_number()) throw ConfigError("thresholds", "value of '" + rule + "' must be a number");
      out.push_back(make_threshold(rule, value.get<double>()));
    }
    return out;
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const std::string item = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("thresholds", "expected rule=value, got '" + item + "'");
    const std::string rule(trim(std::string_view(item).substr(0, eq)));
    const auto value_text = trim(std::string_view(item).substr(eq + 1));
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc{} || ptr != value_text.data() + value_text.size()) {
      throw ConfigError("thresholds", "value of '" + rule + "' is not a number");
    }
    out.push_back(make_threshold(rule, value));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> check_thresholds(const DeltaReport& d, const std::vector<Threshold>& thresholds) {
  std::vector<std::string> violations;
  auto above = [&](const std::string& rule, const char* name, double actual, double limit) {
    if (actual > limit) violations.push_back(rule + " (" + name + "=" + num(actual) + " > " + num(limit) + ")");
  };
  for (const auto& t : thresholds) {
    if (t.rule == "max_delta_nfr") {
      above(t.rule, "delta_nfr", d.delta_nfr, t.value);
    } else if (t.rule == "max_nfr") {
      above(t.rule, "candidate_nfr", d.candidate_nfr, t.value);
    } else if (t.rule == "max_delta_pct_nfr") {
      if (d.delta_pct_nfr) {
        above(t.rule, "delta_pct_nfr", *d.delta_pct_nfr, t.value);
      } else if (d.candidate_nfr > 0.0) {
        violations.push_back(t.rule + " (delta_pct_nfr=undefined: base NFR is 0 and candidate NFR is " +
                             num(d.candidate_nfr) + ")");
      }
    } else if (t.rule == "min_delta_acc") {
      if (d.delta_acc < t.value) {
        violations.push_back(t.rule + " (delta_acc=" + num(d.delta_acc) + " < " + num(t.value) + ")");
      }
    } else if (t.rule == "max_delta_m_r") {
      if (d.delta_m_r) above(t.rule, "delta_m_r", *d.delta_m_r, t.value);
    }
  }
  return violations;
}

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto parsed = load_checked(opts.log);
    if (!parsed.issues.empty()) {
      print_issues(parsed.issues, err);
      return kExitInvalidInput;
    }
    if (parsed.records.empty()) {
      err << "log '" << opts.log.string() << "' holds no records\n";
      return kExitInvalidInput;
    }
    const auto metric =
        opts.metric.empty() ? default_metric(parsed.records.front().task) : parse_metric(opts.metric);
    const auto report = build_report(parsed.records, metric);
    if (opts.output) write_json(*opts.output, to_json(report));
    out << format_report_table(report);
    return kExitOk;
  } catch (const Error& e) {
    err << "evaluate: " << e.what() << '\n';
    return kExitInvalidInput;
  }
}

int cmd_compare(const CompareOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto thresholds = parse_thresholds(opts.thresholds);
    const auto base = report_from_json(read_json(opts.base));
    const auto candidate = report_from_json(read_json(opts.candidate));
    const auto delta = compare_reports(base, candidate);
    if (opts.output) write_json(*opts.output, to_json(delta));
    out << format_delta_table(delta);
    const auto violations = check_thresholds(delta, thresholds);
    for (const auto& v : violations) err << "threshold violated: " << v << '\n';
    return violations.empty() ? kExitOk : kExitGateFailed;
  } catch (const Error& e) {
    err << "compare: " << e.what() << '\n';
    return kExitInvalidInput;
  }
}

int cmd_experiment(const ExperimentOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    auto config = opts.config.empty() ? harness::default_experiment_config() : harness::load_experiment_config(opts.config);
    if (opts.seed) config.seeds = {*opts.seed};
    const auto suite = harness::run_experiment_suite(config, opts.output);
    out << suite.summary_table;
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "experiment: invalid config field " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const Error& e) {
    err << "experiment: " << e.what() << '\n';
    return kExitInvalidInput;
  }
}

int cmd_validate(const std::filesystem::path& log, std::ostream& out, std::ostream& err) {
  try {
    const auto parsed = load_checked(log);
    if (!parsed.issues.empty()) {
      print_issues(parsed.issues, err);
      return kExitInvalidInput;
    }
    out << parsed.records.size() << " records OK\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "validate: " << e.what() << '\n';
    return kExitInvalidInput;
  }
}

}  // namespace compatkit::cli
