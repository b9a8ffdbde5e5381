// Copyright 2026 The hospcourse Authors.
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

#include "hospcourse/cli.hpp"
#include "hospcourse/corpus.hpp"
#include "hospcourse/decode.hpp"
#include "hospcourse/error.hpp"
#include "hospcourse/external_scorer.hpp"
#include "hospcourse/metrics.hpp"
#include "hospcourse/pipeline.hpp"
#include "hospcourse/scorer.hpp"
#include "hospcourse/text.hpp"
#include "hospcourse/timestamp.hpp"
#include "hospcourse/vocab.hpp"
