# Copyright 2026 The ctxpref Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the ctxpref command line.

usage: cli_integration.py <ctxpref binary> <fixture dir> <report schema>
"""

import json
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import jsonschema

CLI = str(Path(sys.argv[1]).resolve())
FIXTURES, SCHEMA = Path(sys.argv[2]).resolve(), Path(sys.argv[3]).resolve()
failures = []


def run(*args, cwd, env=None):
    return subprocess.run([CLI, *args], cwd=cwd, capture_output=True, env=env, timeout=300)


def check(name, condition, detail=""):
    print(f"{'ok' if condition else 'FAIL'}  {name}{': ' + detail if detail and not condition else ''}")
    if not condition:
        failures.append(name)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)

        r = run("--help", cwd=work)
        check("--help exits 0", r.returncode == 0 and b"end-to-end" in r.stdout)

        r = run("end-to-end", "--prompts", "5", cwd=work)
        check("missing seed is a usage error", r.returncode == 2 and b"--seed" in r.stderr, r.stderr.decode())
        check("usage error leaves stdout empty", r.stdout == b"")

        r = run("--seed", "1", "simulate", "--prompts", "10", "--contexts", "0", "--world-out", "w.json", cwd=work)
        check("invalid world options fail", r.returncode != 0 and r.stderr != b"")

        start = time.monotonic()
        r = run("--seed", "5", "end-to-end", "--prompts", "10", "--preferences", "400",
                "--bound-queries", "500", cwd=work)
        elapsed = time.monotonic() - start
        check("tiny end-to-end exits 0", r.returncode == 0, r.stderr.decode())
        check("tiny end-to-end under 1 s", elapsed < 1.0, f"{elapsed:.2f} s")

        schema = json.loads(SCHEMA.read_text())
        outputs = []
        for workers in ("1", "4", "1"):
            r = run("--seed", "11", "--workers", workers, "--json", "end-to-end", "--prompts", "40",
                    "--preferences", "1500", "--bound-queries", "2000", cwd=work)
            outputs.append(r.stdout)
            check(f"end-to-end --json exits 0 with {workers} workers", r.returncode == 0, r.stderr.decode())
        report = json.loads(outputs[0])
        try:
            jsonschema.validate(report, schema)
            valid = True
        except jsonschema.ValidationError as e:
            valid, detail = False, e.message
        check("end-to-end report validates", valid, "" if valid else detail)
        check("end-to-end output is byte-identical on rerun", outputs[0] == outputs[2])
        check("end-to-end output does not depend on workers", outputs[0] == outputs[1])
        check("context-aware agreement beats context-free",
              report["agreement"]["ctx"]["agreement"] > report["agreement"]["nc"]["agreement"])

        r = run("--seed", "12", "--json", "end-to-end", "--prompts", "10", "--preferences", "300",
                "-o", "report.json", cwd=work)
        check("-o writes the file and nothing to stdout",
              r.returncode == 0 and r.stdout == b"" and json.loads((work / "report.json").read_text()) is not None)

        # simulate, fit, eval, verify-bound chain
        for suffix in ("a", "b"):
            r = run("--seed", "3", "simulate", "--prompts", "30", "--preferences", "600",
                    "--world-out", f"w{suffix}.json", "--pairs-out", f"p{suffix}.jsonl", "-o", f"r{suffix}.jsonl",
                    cwd=work)
            check(f"simulate run {suffix}", r.returncode == 0, r.stderr.decode())
        same = all((work / f"{s}a{e}").read_bytes() == (work / f"{s}b{e}").read_bytes()
                   for s, e in (("w", ".json"), ("p", ".jsonl"), ("r", ".jsonl")))
        check("simulate files are byte-identical on rerun", same)

        r = run("--seed", "3", "fit", "--input", "ra.jsonl", "--context-aware", "-o", "est.json", cwd=work)
        check("fit exits 0", r.returncode == 0, r.stderr.decode())
        r1 = run("--seed", "3", "--json", "eval", "--data", "ra.jsonl", "--estimator", "est.json", cwd=work)
        r2 = run("--seed", "3", "--json", "eval", "--data", "ra.jsonl", "--estimator", "est.json", cwd=work)
        check("eval is deterministic", r1.returncode == 0 and r1.stdout == r2.stdout, r1.stderr.decode())
        check("fitted estimator agrees with its training data",
              r1.returncode == 0 and json.loads(r1.stdout)["agreement"] > 0.8)

        r = run("--seed", "3", "eval", "--rpr", "pa.jsonl", "--backend", "random", "--protocol", "nc", cwd=work)
        check("random backend with a seed runs", r.returncode == 0, r.stderr.decode())
        r = run("eval", "--rpr", "pa.jsonl", "--backend", "random", cwd=work)
        check("random backend requires a seed", r.returncode == 2)

        r = run("--seed", "3", "verify-bound", "--world", "wa.json", "--estimator", "est.json", "-n", "500",
                cwd=work)
        check("verify-bound on a fitted estimator exits 0", r.returncode == 0, r.stderr.decode())
        r = run("--seed", "3", "verify-bound", "--world", "wa.json", "--estimator", "perturbed", "-n", "500",
                cwd=work)
        check("verify-bound on a perturbed estimator exits 0", r.returncode == 0, r.stderr.decode())

        r = run("--json", "aggregate", "--witness", cwd=work)
        witness = json.loads(r.stdout) if r.returncode == 0 else {}
        check("aggregate witness diverges", witness.get("borda_differs_from_expected_utility") is True)
        r = run("--seed", "2", "--json", "aggregate", "--search", "--contexts", "3", "--alternatives", "2",
                cwd=work)
        check("aggregate search finds an instance", r.returncode == 0, r.stderr.decode())

        # dataset commands
        pineapple = str(FIXTURES / "pineapple.jsonl")
        r = run("validate-dataset", "--input", pineapple, cwd=work)
        check("pineapple validates", r.returncode == 0, r.stderr.decode())
        (work / "bad.jsonl").write_text('{"id":"a"}\nnot json\n')
        r = run("validate-dataset", "--input", "bad.jsonl", cwd=work)
        check("invalid dataset exits 1 with field diagnostics",
              r.returncode == 1 and b"line 1" in r.stdout + r.stderr and b"line 2" in r.stdout + r.stderr)
        r = run("validate-dataset", "--input", "missing.jsonl", cwd=work)
        check("missing input file fails", r.returncode != 0 and b"missing.jsonl" in r.stderr, r.stderr.decode())

        r = run("--seed", "8", "split", "--input", "pa.jsonl", "--train-out", "tr.jsonl", "--test-out", "te.jsonl",
                cwd=work)
        check("split exits 0", r.returncode == 0, r.stderr.decode())
        train = {json.loads(l)["prompt"] for l in (work / "tr.jsonl").read_text().splitlines()}
        test = {json.loads(l)["prompt"] for l in (work / "te.jsonl").read_text().splitlines()}
        check("split shares no prompts", train and test and not train & test)

        r = run("augment", "--input", "pa.jsonl", "--mode", "expand", "-o", "expanded.jsonl", cwd=work)
        lines = (work / "expanded.jsonl").read_text().splitlines() if r.returncode == 0 else []
        pairs = (work / "pa.jsonl").read_text().splitlines()
        check("expand doubles the record count", len(lines) == 2 * len(pairs), r.stderr.decode())
        r1 = run("--seed", "4", "augment", "--input", "expanded.jsonl", "--mode", "nonsense", cwd=work)
        r2 = run("--seed", "4", "augment", "--input", "expanded.jsonl", "--mode", "nonsense", cwd=work)
        check("nonsense augmentation is deterministic", r1.returncode == 0 and r1.stdout == r2.stdout)

        # profile study
        args = ("--seed", "3", "--json", "infer-profile", "--seeds", "0", "1", "--scorer-samples", "3000")
        r1, r2 = run(*args, cwd=work), run(*args, "--csv", "curve.csv", cwd=work)
        check("infer-profile is deterministic", r1.returncode == 0 and r1.stdout == r2.stdout, r1.stderr.decode())
        check("infer-profile writes csv",
              (work / "curve.csv").exists() and (work / "curve.csv").read_text().startswith("profile,n,"))

        # config file with flag override
        (work / "run.ini").write_text("seed = 21\n")
        r1 = run("--config", "run.ini", "--json", "end-to-end", "--prompts", "8", "--preferences", "200", cwd=work)
        r2 = run("--seed", "21", "--json", "end-to-end", "--prompts", "8", "--preferences", "200", cwd=work)
        check("config supplies the seed", r1.returncode == 0 and r1.stdout == r2.stdout, r1.stderr.decode())
        r3 = run("--config", "run.ini", "--seed", "22", "--json", "end-to-end", "--prompts", "8",
                 "--preferences", "200", cwd=work)
        check("flags override the config", r3.returncode == 0 and json.loads(r3.stdout)["seed"] == 22)

        # judge backend against a closed port fails cleanly and keeps the key out of output
        env = dict(os.environ, CTXPREF_CLI_SECRET="sk-cli-secret-77")
        r = run("--seed", "1", "--log-level", "debug", "eval", "--rpr", pineapple, "--backend", "judge",
                "--endpoint", "http://127.0.0.1:9/v1/chat/completions", "--model", "m",
                "--api-key-env", "CTXPREF_CLI_SECRET", "--max-attempts", "2", "--timeout", "2",
                cwd=work, env=env)
        check("unreachable judge fails with a nonzero exit", r.returncode != 0)
        check("api key never printed", b"sk-cli-secret-77" not in r.stdout + r.stderr)

    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
