#pragma once

#include "convord/approximation.hpp"
#include "convord/config.hpp"
#include "convord/convergence.hpp"
#include "convord/kernel_oracle.hpp"
#include "convord/ordering_lab.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace convord {

using Json = nlohmann::ordered_json;

/// git describe of the source tree the library was built from.
std::string git_describe();

/// Finite values as numbers, non-finite ones as "inf", "-inf" or "nan".
Json number(double v);
/// 17 significant digits; non-finite as in number().
std::string csv_number(double v);

Json to_json(const ExperimentConfig& config);
Json to_json(const ConstantsReport& r);
Json to_json(const Resolution& r);
Json to_json(const OrderingReport& r);
Json to_json(const RateReport& r);
Json to_json(const TruncationReport& r);
Json to_json(const CounterexampleReport& r);
Json to_json(const ConvexityDefect& d);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  std::string str() const;
};

/// One row per functional.
CsvTable ordering_csv(const OrderingReport& r);

/// Top-level report: command, status, git describe, results, config echo, and a
/// run_info section (timestamp, threads) that is not part of the stable content.
Json assemble_report(const std::string& command, const std::string& status, Json results, Json config_echo);

/// Dump of everything except run_info.
std::string canonical_dump(const Json& report);
/// Hex FNV-1a 64 of canonical_dump.
std::string stability_hash(const Json& report);

/// Writes <dir>/<stem>.json and/or <dir>/<stem>.csv; returns the written paths.
std::vector<std::string> write_reports(Json report, const CsvTable& csv, const std::string& directory,
                                       const std::string& stem, const std::vector<std::string>& formats);

}  // namespace convord
