"""Validate report.json from every synthetic fixture against the report schema."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

FIXTURES = [
    ("two", []),
    ("two", ["--unstable"]),
    ("four", []),
    *[("four", ["--destabilizer", str(m)]) for m in range(1, 5)],
]


def main() -> int:
    exe, schema_path = sys.argv[1], Path(sys.argv[2])
    validator = jsonschema.Draft202012Validator(json.loads(schema_path.read_text()))
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        for n, (kind, flags) in enumerate(FIXTURES):
            data = Path(tmp) / f"sys{n}"
            subprocess.run([exe, "synth", kind, *flags, "--out", str(data)], check=True, capture_output=True)
            for command in ("check", "sense"):
                out = Path(tmp) / f"out{n}-{command}"
                run = subprocess.run([exe, command, str(data / "manifest.json"), "--out", str(out), "--no-plots"],
                                     capture_output=True, text=True)
                label = " ".join([kind, *flags, command])
                if run.returncode not in (0, 2):
                    print(f"FAIL {label}: exit {run.returncode}: {run.stderr.strip()}")
                    failures += 1
                    continue
                report = json.loads((out / "report.json").read_text())
                errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
                for e in errors:
                    print(f"FAIL {label}: {'/'.join(map(str, e.path))}: {e.message}")
                failures += bool(errors)
                if not errors:
                    print(f"ok   {label}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
