"""Loads the compiled extension and exercises each binding once.

Build first with
    cargo build --release -p qnetsup-py --features extension-module
then run
    python3 python/smoke_test.py [path/to/libqnetsup_py.so]
"""

import importlib.util
import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def locate() -> Path:
    if len(sys.argv) > 1:
        return Path(sys.argv[1])
    for profile in ("release", "debug"):
        for name in ("libqnetsup_py.so", "libqnetsup_py.dylib", "qnetsup_py.dll"):
            p = ROOT / "target" / profile / name
            if p.exists():
                return p
    sys.exit("extension not built; see the module docstring")


def load(lib: Path):
    # The interpreter wants the file named after the module.
    tmp = Path(tempfile.mkdtemp())
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    target = tmp / f"qnetsup_py{suffix}"
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("qnetsup_py", target)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def main() -> None:
    q = load(locate())

    names = q.scenario_names()
    assert "encoding" in names and "custom" in names, names

    report = json.loads(q.run("encoding", seed=3))
    assert report["all_pass"], "encoding checks failed"
    assert all(c["pass"] for r in report["reports"] for c in r["checks"])
    assert q.run("encoding", seed=3) == q.run("encoding", seed=3)

    s = 1 / math.sqrt(2)
    bell = [(s, 0.0), (0.0, 0.0), (0.0, 0.0), (s, 0.0)]
    assert abs(q.negativity(bell, [2, 2], [0]) - 0.5) < 1e-10

    amps = q.ghz_superposition([(0.5, 0.0)] * 4, seed=1)
    assert len(amps) == 256
    assert abs(sum(re * re + im * im for re, im in amps) - 1.0) < 1e-9

    assert q.nonlinearity_trace_distance() > 0.01

    try:
        q.run("no_such_scenario")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown scenario accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
