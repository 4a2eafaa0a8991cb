"""Runs the invlqr tool over a set of inputs and validates every report against the schema."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

PROBLEM = {
    "A": [[1, 0, 1], [-2, -3, -1], [0, 0, 2]],
    "B": [[1, 0], [0, 1], [0, 1]],
    "Q": [[4, -1, 2], [-1, 2, -2], [2, -2, 3]],
    "F": [[3, -1, 0], [-1, 2, -1], [0, -1, 1]],
    "T": 1.0,
    "N": 1000,
    "x0": [1, -0.5, 0],
}


def main() -> int:
    tool, schema_path = sys.argv[1], sys.argv[2]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    with tempfile.TemporaryDirectory() as tmp:
        d = pathlib.Path(tmp)
        (d / "p.json").write_text(json.dumps(PROBLEM))
        subprocess.run([tool, "forward", "--problem", d / "p.json", "--out", d / "k.csv"],
                       check=True, capture_output=True)
        common = ["--problem", d / "p.json", "--trajectory", d / "k.csv"]
        runs = {
            "check": ["check", *common],
            "check-noisy": ["check", *common, "--snr-db", "20", "--seed", "3"],
            "solve": ["solve", *common],
            "solve-base": ["solve", *common, "--select", "base"],
            "solve-noisy": ["solve", *common, "--snr-db", "20"],
            "approx": ["approx", *common, "--method", "both"],
            "approx-noisy": ["approx", *common, "--method", "kkt-qp", "--snr-db", "20"],
        }
        for name in ["example1", "example2", "example3", "case-study-exact", "case-study-noisy"]:
            runs["demo-" + name] = ["demo", name, "--steps", "1000"]

        failures = 0
        for name, args in runs.items():
            out = d / (name + ".json")
            proc = subprocess.run([tool, *args, "--out", out], capture_output=True, text=True)
            if proc.returncode not in (0, 1) or not out.exists():
                print(f"FAIL {name}: exit {proc.returncode}: {proc.stderr.strip()}")
                failures += 1
                continue
            report = json.loads(out.read_text())
            errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
            for e in errors:
                print(f"FAIL {name}: {'/'.join(map(str, e.path))}: {e.message}")
            failures += len(errors)
            if name in ("solve", "demo-case-study-exact") and report.get("solution_space") is None:
                print(f"FAIL {name}: feasible input produced no solution space")
                failures += 1
            elif not errors:
                print(f"ok   {name}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
