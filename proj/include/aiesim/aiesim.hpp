/*
 * Copyright 2026 The aiesim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/// @file aiesim.hpp
/// @brief Umbrella header.

#pragma once

#include "aiesim/common.hpp"
#include "aiesim/problem.hpp"
#include "aiesim/qe.hpp"
#include "aiesim/program.hpp"
#include "aiesim/oracle.hpp"
#include "aiesim/graph.hpp"
#include "aiesim/graph_io.hpp"
#include "aiesim/engine.hpp"
#include "aiesim/executor.hpp"
#include "aiesim/pl.hpp"
#include "aiesim/harness.hpp"
