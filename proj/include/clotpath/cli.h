// Copyright 2026 The clotpath Authors. All Rights Reserved.
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

#include <iosfwd>
#include <string>
#include <vector>

#include "clotpath/metrics.h"
#include "clotpath/run_config.h"

namespace clotpath {

// Subcommands. Each reads what its predecessor wrote, writes its outputs
// plus config.json into config.output_dir, and throws clotpath::Error on
// failure after removing what it had written.

/// <out>/slides/<CLASS>_<nnn>.png, <CLASS>_<nnn>_mask.png, <out>/labels.csv.
void CmdSynth(const RunConfig& config, std::ostream& log);
/// <out>/manifest.jsonl and <out>/slides.csv from config.inputs.
void CmdTile(const RunConfig& config, std::ostream& log);
/// Content filter, then the stage-1 model when one is configured.
void CmdFilter(const RunConfig& config, std::ostream& log);
/// <out>/features.csv. `stage` is 1 (mask-labeled tiles, 128 px) or 2 (kept
/// tiles, 256 px, slide labels).
void CmdFeatures(const RunConfig& config, int stage, std::ostream& log);
void CmdTrainBackground(const RunConfig& config, std::ostream& log);
void CmdTrainClot(const RunConfig& config, std::ostream& log);
/// <out>/scores.csv from features and a model.
void CmdPredict(const RunConfig& config, std::ostream& log);
/// <out>/report.json and report.txt; returns the reports.
std::vector<EvalReport> CmdEvaluate(const RunConfig& config, std::ostream& log);
void CmdSplit(const RunConfig& config, std::ostream& log);
/// Whole chain under config.output_dir; returns the final reports.
std::vector<EvalReport> CmdRunAll(const RunConfig& config, bool synthetic,
                                  std::ostream& log);

/// Parses argv and dispatches. Returns the process exit code.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace clotpath
