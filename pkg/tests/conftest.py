import textwrap
from pathlib import Path

import pytest

from ringsqueeze import cli


@pytest.fixture
def run_cli(tmp_path):
    """Run the CLI with a config written from text; returns a helper."""

    def runner(command: str, config_text: str, out: str = "out",
               extra_args: tuple = ()):
        config_path = tmp_path / f"{command}.cfg"
        config_path.write_text(textwrap.dedent(config_text), encoding="utf-8")
        out_dir = tmp_path / out
        code = cli.main([command, "--config", str(config_path),
                         "--out", str(out_dir), *extra_args])
        return code, out_dir

    return runner


@pytest.fixture
def tmp_out(tmp_path) -> Path:
    out = tmp_path / "artifacts"
    out.mkdir()
    return out
