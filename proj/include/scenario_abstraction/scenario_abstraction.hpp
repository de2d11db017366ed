// Copyright 2026 The scenario_abstraction Authors
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

#ifndef SCENARIO_ABSTRACTION__SCENARIO_ABSTRACTION_HPP_
#define SCENARIO_ABSTRACTION__SCENARIO_ABSTRACTION_HPP_

#include "scenario_abstraction/config.hpp"
#include "scenario_abstraction/errors.hpp"
#include "scenario_abstraction/ingest.hpp"
#include "scenario_abstraction/lane_frame.hpp"
#include "scenario_abstraction/patterns.hpp"
#include "scenario_abstraction/payload.hpp"
#include "scenario_abstraction/pipeline.hpp"
#include "scenario_abstraction/quantfit.hpp"
#include "scenario_abstraction/segmentation.hpp"
#include "scenario_abstraction/statistics.hpp"
#include "scenario_abstraction/synthgen.hpp"
#include "scenario_abstraction/xosc_export.hpp"

#endif  // SCENARIO_ABSTRACTION__SCENARIO_ABSTRACTION_HPP_
