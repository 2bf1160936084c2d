// Copyright 2026 The purcellnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#pragma once

#include "purcell/errors.hpp"
#include "purcell/tline.hpp"
#include "purcell/netlist.hpp"
#include "purcell/network.hpp"
#include "purcell/touchstone.hpp"
#include "purcell/purcell_model.hpp"
#include "purcell/levmar.hpp"
#include "purcell/spectrum_fit.hpp"
#include "purcell/reset.hpp"
#include "purcell/readout.hpp"
#include "purcell/svg.hpp"
