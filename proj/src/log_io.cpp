#include "compatkit/log_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace compatkit {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::size_t line,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError(line, "unknown field '" + key + "' in " + where);
    }
  }
}

Prediction parse_prediction(const json& obj, std::size_t line, const std::string& side) {
  if (!obj.is_object()) throw ParseError(line, "'" + side + "' must be an object");
  reject_unknown_keys(obj, {"text", "choice_index", "choice_loglikelihoods"}, line, "'" + side + "'");
  Prediction p;
  if (const auto it = obj.find("text"); it != obj.end()) {
    if (!it->is_string()) throw ParseError(line, side + ".text must be a string");
    p.text = it->get<std::string>();
  }
  if (const auto it = obj.find("choice_index"); it != obj.end()) {
    if (!it->is_number_unsigned()) throw ParseError(line, side + ".choice_index must be a non-negative integer");
    p.choice_index = it->get<std::size_t>();
  }
  if (const auto it = obj.find("choice_loglikelihoods"); it != obj.end()) {
    if (!it->is_array()) throw ParseError(line, side + ".choice_loglikelihoods must be an array");
    std::vector<double> ll;
    for (const auto& v : *it) {
      if (!v.is_number()) throw ParseError(line, side + ".choice_loglikelihoods must hold numbers");
      ll.push_back(v.get<double>());
    }
    p.choice_loglikelihoods = std::move(ll);
  }
  return p;
}

json prediction_json(const Prediction& p, TaskKind task) {
  json obj = json::object();
  if (task != TaskKind::MultipleChoice || !p.text.empty()) obj["text"] = p.text;
  if (p.choice_index) obj["choice_index"] = *p.choice_index;
  if (p.choice_loglikelihoods) obj["choice_loglikelihoods"] = *p.choice_loglikelihoods;
  return obj;
}

}  // namespace

ParsedLog parse_log(std::istream& in) {
  ParsedLog log;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "record must be a JSON object");
    reject_unknown_keys(obj, {"id", "task", "ground_truth", "old", "new"}, line, "record");

    EvalRecord r;
    const auto id = obj.find("id");
    if (id == obj.end() || !id->is_string()) throw ParseError(line, "missing string field 'id'");
    r.instance_id = id->get<std::string>();

    const auto task = obj.find("task");
    if (task == obj.end() || !task->is_string()) throw ParseError(line, "missing string field 'task'");
    const auto kind = parse_task_kind(task->get<std::string>());
    if (!kind) throw ParseError(line, "unknown task '" + task->get<std::string>() + "'");
    r.task = *kind;

    const auto gt = obj.find("ground_truth");
    if (gt == obj.end()) throw ParseError(line, "missing field 'ground_truth'");
    if (r.task == TaskKind::MultipleChoice) {
      if (!gt->is_number_unsigned()) throw ParseError(line, "ground_truth must be a non-negative integer");
      r.ground_truth = gt->get<std::size_t>();
    } else {
      if (!gt->is_string()) throw ParseError(line, "ground_truth must be a string");
      r.ground_truth = gt->get<std::string>();
    }

    bool complete = true;
    for (const char* side : {"old", "new"}) {
      const auto it = obj.find(side);
      if (it == obj.end()) {
        log.issues.push_back({r.instance_id, std::string("missing counterpart: no '") + side + "' prediction"});
        complete = false;
        continue;
      }
      (std::string_view(side) == "old" ? r.pred_old : r.pred_new) = parse_prediction(*it, line, side);
    }
    if (complete) log.records.push_back(std::move(r));
  }
  return log;
}

ParsedLog read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open log '" + path.string() + "'");
  return parse_log(in);
}

std::string to_jsonl_line(const EvalRecord& r) {
  json obj;
  obj["id"] = r.instance_id;
  obj["task"] = std::string(to_string(r.task));
  if (const auto* idx = std::get_if<std::size_t>(&r.ground_truth)) {
    obj["ground_truth"] = *idx;
  } else {
    obj["ground_truth"] = std::get<std::string>(r.ground_truth);
  }
  obj["old"] = prediction_json(r.pred_old, r.task);
  obj["new"] = prediction_json(r.pred_new, r.task);
  return obj.dump();
}

void write_log(std::ostream& out, std::span<const EvalRecord> records) {
  for (const auto& r : records) out << to_jsonl_line(r) << '\n';
}

void write_log(const std::filesystem::path& path, std::span<const EvalRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write log '" + path.string() + "'");
  write_log(out, records);
}

}  // namespace compatkit
