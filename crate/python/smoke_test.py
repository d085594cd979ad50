"""Smoke test for the `wds` extension module.

Builds the extension with cargo when it is not importable, then exercises
one call per pipeline.  Run from anywhere: python3 python/smoke_test.py
"""

import importlib
import json
import math
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load():
    try:
        return importlib.import_module("wds")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "wds-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    target = os.environ.get("CARGO_TARGET_DIR", os.path.join(ROOT, "target"))
    lib = os.path.join(target, "release", "libwds.so")
    if not os.path.exists(lib):
        lib = os.path.join(target, "release", "libwds.dylib")
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, os.path.join(tmp, "wds.so"))
    sys.path.insert(0, tmp)
    return importlib.import_module("wds")


def main():
    wds = load()
    golden = (3 - math.sqrt(5)) / 2

    w = wds.sturmian_window("golden", 100)
    assert len(w) == 201 and set(w) == {0, 1}
    assert all(wds.complexity("golden", 500, n) == n + 1 for n in range(1, 30))
    lo, hi = wds.rotation_interval("golden", 1000)
    assert eval(lo) <= golden <= eval(hi)

    assert abs(wds.denjoy_rotation("golden", 100_000) - golden) < 2e-5
    assert len(wds.denjoy_orbit("golden", 0.0, 10)) == 10

    lo, hi = wds.rotation_class("golden", 6)
    assert eval(lo) <= golden <= eval(hi)
    assert wds.gap_orbit_count("golden", 6) == 1
    assert wds.graph_distance("golden", "golden", 6) == 0.0

    x, y = wds.standard_map(1.0, 0.5, 0.0)
    assert abs(x - 0.5) < 1e-12 and abs(y) < 1e-12
    assert len(wds.aubry_mather(1.0, 0, 1, "minus")) > 1
    hyp = json.loads(wds.hyperbolicity(1.0, 0, 1))
    assert abs(hyp["lambda"] * hyp["mu"] - 1) < 1e-8

    cert = wds.horseshoe_certificate(1.0, 0, 1)
    assert json.loads(cert)["sigma2_entropy"] >= math.log(2) - 1e-6
    rep = json.loads(wds.verify_containment(cert, [(1, 13)]))
    assert rep["rows"][0]["contained"]

    try:
        wds.sturmian_window("nonsense", 10)
    except ValueError:
        pass
    else:
        raise AssertionError("bad angle accepted")
    print("wds", wds.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
