// Copyright 2026 The branch_mpc Authors
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

#include "branch_mpc/scenario.hpp"

#include <stdexcept>

namespace branch_mpc
{

std::string_view to_string(ScenarioKind kind)
{
  switch (kind) {
    case ScenarioKind::Merging:
      return "merging";
    case ScenarioKind::Intersection:
      return "intersection";
    case ScenarioKind::TrafficLight:
      return "traffic_light";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(std::string_view name)
{
  if (name == "merging") return ScenarioKind::Merging;
  if (name == "intersection") return ScenarioKind::Intersection;
  if (name == "traffic_light") return ScenarioKind::TrafficLight;
  throw std::invalid_argument("unknown scenario kind '" + std::string(name) + "'");
}

}  // namespace branch_mpc
