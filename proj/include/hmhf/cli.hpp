#pragma once

#include <iosfwd>

#include "hmhf/config.hpp"

namespace hmhf {

// Runs the configured command and writes its files plus manifest.json into config.out. Module errors
// propagate as hmhf::Error; the caller turns them into a nonzero exit status.
void run(const RunConfig& config, std::ostream& log);

}  // namespace hmhf
