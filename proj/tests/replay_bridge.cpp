// Copyright 2026 The proknow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serves recorded bridge responses over standard streams.
//
// The fixture holds one {"request": {...}, "response": {...}} record per
// line. A request is answered only if it equals the recorded request with the
// same id; anything else gets a protocol error record.

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "proknow/bridge.hpp"

int main(int argc, char** argv) {
  using nlohmann::json;
  CLI::App app{"Replay recorded bridge responses", "replay_bridge"};
  std::string fixture;
  app.add_option("--replay", fixture, "Fixture of request/response pairs")->required();
  app.add_flag("--stdio", "Serve on standard streams (the only mode)");
  CLI11_PARSE(app, argc, argv);

  std::ifstream in(fixture);
  if (!in) {
    std::cerr << "replay_bridge: cannot open " << fixture << '\n';
    return 1;
  }
  std::map<std::string, std::pair<json, json>> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("request") || !j.contains("response")) {
      std::cerr << "replay_bridge: malformed fixture line\n";
      return 1;
    }
    const std::string id = j["request"].value("id", "");
    records[id] = {j["request"], j["response"]};
  }
  if (records.empty()) return 0;

  while (std::getline(std::cin, line)) {
    json request = json::parse(line, nullptr, false);
    std::string id;
    if (!request.is_discarded() && request.is_object() && request.contains("id") && request["id"].is_string())
      id = request["id"].get<std::string>();
    auto it = records.find(id);
    if (request.is_discarded() || id.empty())
      std::cout << proknow::bridge::encode_error(id, "malformed request") << '\n';
    else if (it == records.end())
      std::cout << proknow::bridge::encode_error(id, "unknown request id") << '\n';
    else if (it->second.first != request)
      std::cout << proknow::bridge::encode_error(id, "request differs from recording") << '\n';
    else
      std::cout << it->second.second.dump() << '\n';
    std::cout.flush();
  }
  return 0;
}
