// Copyright 2026 The pixelreg Authors
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

#include "pixelreg/analysis.hpp"
#include "pixelreg/control.hpp"
#include "pixelreg/dynamics.hpp"
#include "pixelreg/error.hpp"
#include "pixelreg/experiment.hpp"
#include "pixelreg/image.hpp"
#include "pixelreg/lyapunov.hpp"
#include "pixelreg/scene.hpp"
#include "pixelreg/simulation.hpp"
#include "pixelreg/sof.hpp"
#include "pixelreg/suites.hpp"
#include "pixelreg/viewsynth.hpp"
