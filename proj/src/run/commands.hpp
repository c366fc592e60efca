#pragma once

#include <string>

#include "run/config.hpp"

namespace pixeltext {

// The five pipeline entry points. Each is a pure function of the resolved
// config plus the files it references; all outputs land under
// run.out_dir/run.name and include the resolved config snapshot.
void cmd_pretrain(const RunConfig& config);
void cmd_finetune(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_render(const RunConfig& config);
void cmd_report(const RunConfig& config);

// Run directory for a config: <out_dir>/<name>.
std::string run_directory(const RunConfig& config);

}  // namespace pixeltext
