// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/cli.hpp"

int main(int argc, char** argv) { return pathforget::cli_main(argc, argv); }
