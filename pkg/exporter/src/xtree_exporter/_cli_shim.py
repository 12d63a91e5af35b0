"""python -m xtree_exporter._cli_shim <command> ... (mirrors the console
scripts for environments where entry points are not on PATH)."""

import sys

from .cli import main_export_instances, main_export_tree


def main() -> int:
    if len(sys.argv) < 2:
        print("usage: _cli_shim export-tree|export-instances ...", file=sys.stderr)
        return 2
    cmd, argv = sys.argv[1], sys.argv[2:]
    if cmd == "export-tree":
        return main_export_tree(argv)
    if cmd == "export-instances":
        return main_export_instances(argv)
    print(f"unknown command {cmd!r}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
