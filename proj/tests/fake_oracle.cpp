// Stand-in oracle for exercising compare-oracle: reads a job on stdin and
// answers with a report.  Mode (argv[1]): match, mismatch (first quantity
// disagrees), drop (last quantity has no verdict), garbage, fail.
#include <iostream>
#include <iterator>
#include <string>

#include "json.hpp"

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "match";
  if (mode == "fail") return 1;
  const std::string input{std::istreambuf_iterator<char>(std::cin), {}};
  if (mode == "garbage") {
    std::cout << "not json\n";
    return 0;
  }
  const auto job = nlohmann::json::parse(input);
  nlohmann::json report;
  report["job_id"] = job.at("job_id");
  report["verdicts"] = nlohmann::json::object();
  const auto& qs = job.at("quantities");
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (mode == "drop" && i + 1 == qs.size()) continue;
    const bool bad = mode == "mismatch" && i == 0;
    nlohmann::json v{{"verdict", bad ? "mismatch" : "match"}};
    if (bad) v["diff"] = nlohmann::json::array({qs[i].at("primary").empty() ? nullptr : qs[i]["primary"][0]});
    report["verdicts"][qs[i].at("name").get<std::string>()] = v;
  }
  report["truncation"] = {{"order", job.value("order", 0)}};
  std::cout << report.dump() << "\n";
  return 0;
}
