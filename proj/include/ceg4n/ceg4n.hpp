/*
 * Copyright (c) 2026 The ceg4n Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "ceg4n/anchors.hpp"
#include "ceg4n/cegis.hpp"
#include "ceg4n/errors.hpp"
#include "ceg4n/gpfq.hpp"
#include "ceg4n/io.hpp"
#include "ceg4n/network.hpp"
#include "ceg4n/quantizer.hpp"
#include "ceg4n/report.hpp"
#include "ceg4n/search.hpp"
#include "ceg4n/train.hpp"
#include "ceg4n/verifier.hpp"
