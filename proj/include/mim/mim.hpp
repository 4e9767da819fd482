// Copyright 2026 The MIM Authors
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

#pragma once

#include "mim/core_types.hpp"
#include "mim/lidar_sim.hpp"
#include "mim/map_builder.hpp"
#include "mim/classifier.hpp"
#include "mim/fn_tracker.hpp"
#include "mim/inflation.hpp"
#include "mim/planner.hpp"
#include "mim/metrics.hpp"
#include "mim/scene_io.hpp"
#include "mim/episode.hpp"
#include "mim/export.hpp"
