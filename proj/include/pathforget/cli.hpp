// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pathforget {

/// Entry point of the `pathforget` tool. `args` excludes the program name.
/// Returns the process exit code; never throws.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, const char* const* argv);

} // namespace pathforget
