#include "compatkit/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace compatkit {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(kUndefined); }

std::optional<double> read_optional(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_string() && v.get<std::string>() == kUndefined) return std::nullopt;
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

constexpr std::array<FlipQuadrant, 4> kQuadrants = {FlipQuadrant::BothCorrect, FlipQuadrant::PositiveFlip,
                                                    FlipQuadrant::BothIncorrect, FlipQuadrant::NegativeFlip};

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

json to_json(const CompatibilityReport& r) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["task"] = std::string(to_string(r.task));
  j["metric"] = r.metric;
  j["n"] = r.n;
  j["acc_old"] = r.acc_old;
  j["acc_new"] = r.acc_new;
  j["nfr"] = r.nfr;
  j["pfr"] = r.pfr;
  j["nfr_mc"] = optional_number(r.nfr_mc);
  j["btc"] = optional_number(r.btc);
  json q = json::object();
  for (auto quadrant : kQuadrants) q[std::string(to_string(quadrant))] = r.quadrant_counts[static_cast<std::size_t>(quadrant)];
  j["quadrant_counts"] = q;
  if (r.smooth) {
    j["smooth"] = {{"pfr_tilde", r.smooth->pfr_tilde},
                   {"nfr_tilde", r.smooth->nfr_tilde},
                   {"m_g", r.smooth->m_g},
                   {"m_r", r.smooth->m_r},
                   {"d_values", r.smooth->d_values}};
  } else {
    j["smooth"] = nullptr;
  }
  return j;
}

CompatibilityReport report_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw Error("unsupported report schema_version " + j.at("schema_version").dump());
    }
    CompatibilityReport r;
    const auto task = parse_task_kind(j.at("task").get<std::string>());
    if (!task) throw Error("unknown task in report: " + j.at("task").dump());
    r.task = *task;
    r.metric = j.at("metric").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.acc_old = j.at("acc_old").get<double>();
    r.acc_new = j.at("acc_new").get<double>();
    r.nfr = j.at("nfr").get<double>();
    r.pfr = j.at("pfr").get<double>();
    r.nfr_mc = read_optional(j, "nfr_mc");
    r.btc = read_optional(j, "btc");
    const auto& q = j.at("quadrant_counts");
    for (auto quadrant : kQuadrants) {
      r.quadrant_counts[static_cast<std::size_t>(quadrant)] = q.at(std::string(to_string(quadrant))).get<std::size_t>();
    }
    if (const auto& s = j.at("smooth"); !s.is_null()) {
      SmoothReport smooth;
      smooth.pfr_tilde = s.at("pfr_tilde").get<double>();
      smooth.nfr_tilde = s.at("nfr_tilde").get<double>();
      smooth.m_g = s.at("m_g").get<double>();
      smooth.m_r = s.at("m_r").get<double>();
      smooth.d_values = s.at("d_values").get<std::vector<double>>();
      r.smooth = std::move(smooth);
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
}

json to_json(const DeltaReport& d) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["n"] = d.n;
  j["base_nfr"] = d.base_nfr;
  j["candidate_nfr"] = d.candidate_nfr;
  j["delta_nfr"] = d.delta_nfr;
  j["delta_pct_nfr"] = optional_number(d.delta_pct_nfr);
  j["delta_pfr"] = d.delta_pfr;
  j["delta_acc"] = d.delta_acc;
  j["delta_m_g"] = optional_number(d.delta_m_g);
  j["delta_m_r"] = optional_number(d.delta_m_r);
  return j;
}

DeltaReport delta_from_json(const json& j) {
  try {
    DeltaReport d;
    d.n = j.at("n").get<std::size_t>();
    d.base_nfr = j.at("base_nfr").get<double>();
    d.candidate_nfr = j.at("candidate_nfr").get<double>();
    d.delta_nfr = j.at("delta_nfr").get<double>();
    d.delta_pct_nfr = read_optional(j, "delta_pct_nfr");
    d.delta_pfr = j.at("delta_pfr").get<double>();
    d.delta_acc = j.at("delta_acc").get<double>();
    d.delta_m_g = read_optional(j, "delta_m_g");
    d.delta_m_r = read_optional(j, "delta_m_r");
    return d;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed delta report: ") + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::string format_percent(std::optional<double> fraction) {
  return fraction ? fixed(100.0 * *fraction, 2) : std::string(kUndefined);
}

std::string format_report_table(const CompatibilityReport& r) {
  std::ostringstream out;
  auto row = [&](const std::string& name, const std::string& value) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-16s %12s\n", name.c_str(), value.c_str());
    out << buf;
  };
  row("task", std::string(to_string(r.task)));
  row("metric", r.metric);
  row("n", std::to_string(r.n));
  row("acc_old %", format_percent(r.acc_old));
  row("acc_new %", format_percent(r.acc_new));
  row("NFR %", format_percent(r.nfr));
  row("PFR %", format_percent(r.pfr));
  row("NFR_mc %", format_percent(r.nfr_mc));
  row("BTC %", format_percent(r.btc));
  for (auto quadrant : kQuadrants) {
    row(std::string(to_string(quadrant)), std::to_string(r.quadrant_counts[static_cast<std::size_t>(quadrant)]));
  }
  if (r.smooth) {
    row("~PFR %", format_percent(r.smooth->pfr_tilde));
    row("~NFR %", format_percent(r.smooth->nfr_tilde));
    row("m_g", fixed(r.smooth->m_g, 4));
    row("m_r", fixed(r.smooth->m_r, 4));
  }
  return out.str();
}

std::string format_delta_table(const DeltaReport& d) {
  std::ostringstream out;
  auto row = [&](const std::string& name, const std::string& value) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-16s %12s\n", name.c_str(), value.c_str());
    out << buf;
  };
  auto opt4 = [](const std::optional<double>& v) { return v ? fixed(*v, 4) : std::string(kUndefined); };
  row("n", std::to_string(d.n));
  row("NFR %", format_percent(d.base_nfr));
  row("NFR_c %", format_percent(d.candidate_nfr));
  row("dNFR_c", format_percent(d.delta_nfr));
  row("d%NFR_c", d.delta_pct_nfr ? fixed(*d.delta_pct_nfr, 2) : std::string(kUndefined));
  row("dPFR_c", format_percent(d.delta_pfr));
  row("dacc_c", format_percent(d.delta_acc));
  row("dm_g", opt4(d.delta_m_g));
  row("dm_r", opt4(d.delta_m_r));
  return out.str();
}

}  // namespace compatkit
