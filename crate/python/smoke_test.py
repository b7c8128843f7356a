"""Smoke test for the Python bindings.

Uses an installed ``pencilforge_py`` when available, otherwise loads the
library built by ``cargo build -p pencilforge-py``.
"""

import importlib.machinery
import importlib.util
import json
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import pencilforge_py

        return pencilforge_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libpencilforge_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("pencilforge_py", str(lib))
            spec = importlib.util.spec_from_file_location("pencilforge_py", lib, loader=loader)
            mod = importlib.util.module_from_spec(spec)
            loader.exec_module(mod)
            return mod
    sys.exit("pencilforge_py not found; run `cargo build -p pencilforge-py` first")


def main():
    pf = load()
    report = json.loads(pf.run("verify-deformation", case="N5", eta12="1", eta22="1", f1="u1", f2="1"))
    assert report["passed"], report
    poisson = next(c for c in report["checks"] if c["name"] == "N5/poisson")
    assert poisson["max_eps_order"] == 2

    inv = json.loads(pf.run("invariants", case="T3", eta12="1", eta22="1", f2="u1^2"))
    assert inv["outputs"]["lambda2"] == "exp(-u2/u1)*u1^3", inv["outputs"]

    demo = json.loads(pf.run("lift-demo"))
    assert demo["passed"]

    assert pf.canonical("u1_x*u2_x") == pf.canonical("u2_x*u1_x")
    controls = json.loads(pf.negative_controls())
    assert all(c["status"] == "pass" and c["residual"]["nonzero"] > 0 for c in controls)

    try:
        pf.run("verify-deformation", case="N6(1)")
    except ValueError:
        pass
    else:
        raise AssertionError("excluded case accepted")

    schema_path = ROOT / "crates" / "cli" / "schema" / "report.schema.json"
    try:
        import jsonschema
    except ImportError:
        jsonschema = None
    if jsonschema is not None:
        schema = json.loads(schema_path.read_text())
        for r in (report, inv, demo):
            jsonschema.validate(r, schema)
    print("python smoke test passed")


if __name__ == "__main__":
    main()
