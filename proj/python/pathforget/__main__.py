# Copyright (c) 2026, pathforget authors
# SPDX-License-Identifier: Apache-2.0
import sys

from ._core import cli


def main() -> int:
    code, out, err = cli(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
