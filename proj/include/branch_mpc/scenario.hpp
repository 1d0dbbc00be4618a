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

#ifndef BRANCH_MPC__SCENARIO_HPP_
#define BRANCH_MPC__SCENARIO_HPP_

#include <string>
#include <string_view>

namespace branch_mpc
{

enum class ScenarioKind { Merging, Intersection, TrafficLight };

std::string_view to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(std::string_view name);

/// Path-length landmarks shared by both agents. Both paths are parameterized
/// so that the conflict point sits at the same s for the AV and the HV.
struct ScenarioGeometry
{
  ScenarioKind kind{ScenarioKind::Merging};
  double s_conflict{100.0};
  double s_br{60.0};
  // Length of the shared region (intersection) [m].
  double conflict_length{10.0};

  bool operator==(const ScenarioGeometry &) const = default;
};

}  // namespace branch_mpc

#endif  // BRANCH_MPC__SCENARIO_HPP_
