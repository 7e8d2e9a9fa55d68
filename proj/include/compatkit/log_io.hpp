#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "compatkit/core.hpp"

namespace compatkit {

/// A JSON-lines prediction log after parsing. Structural problems that do not stop
/// parsing (a record missing its old or new prediction) land in `issues`.
struct ParsedLog {
  std::vector<EvalRecord> records;
  std::vector<ValidationIssue> issues;
};

/// One record per non-blank line:
///   {"id": str, "task": "multiple_choice"|"exact_match"|"generative",
///    "ground_truth": int|str,
///    "old": {"text"?: str, "choice_index"?: int, "choice_loglikelihoods"?: [num]},
///    "new": {...}}
/// Unknown fields (including "version") are rejected. Throws ParseError with the line number.
ParsedLog parse_log(std::istream& in);
ParsedLog read_log(const std::filesystem::path& path);

std::string to_jsonl_line(const EvalRecord& record);
void write_log(std::ostream& out, std::span<const EvalRecord> records);
void write_log(const std::filesystem::path& path, std::span<const EvalRecord> records);

}  // namespace compatkit
