import os
import re
import sys
from dataclasses import dataclass, field

from django.core.management import execute_from_command_line

COMMAND = "fspair"
COMPLEX_PATTERN = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?[+-](\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?i$")


@dataclass
class CliConfig:
    """Parsed invocation: the subcommand, its flags and where the report goes."""

    subcommand: str
    options: dict = field(default_factory=dict)
    output_path: str = None
    seed: int = 0


def parse_complex(text):
    """'a+bi' / 'a-bi' without whitespace, e.g. '0+2i' or '-1.5-0.25i'."""
    if not COMPLEX_PATTERN.match(text):
        raise ValueError(f"expected a complex number written a+bi, got {text!r}")
    return complex(text[:-1] + "j")


def run(argv):
    """Run `fspair <argv...>` in-process and return its exit code."""
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "fspair_project.settings")
    try:
        execute_from_command_line([COMMAND, COMMAND, *argv])
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1
    return 0


def main():
    return run(sys.argv[1:])
