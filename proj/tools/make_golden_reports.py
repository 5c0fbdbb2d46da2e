#!/usr/bin/env python3
"""Regenerate the analyzer golden reports in tests/fixtures/golden.

Runs the installed bandit and pylint on every snippet in
tests/fixtures/snippets with the same flags the analyzer adapter uses, stores
the raw output and exit codes, and writes the expected issue list computed
here independently of the C++ parser.
"""

import argparse
import json
import pathlib
import subprocess

ROOT = pathlib.Path(__file__).resolve().parent.parent
SNIPPETS = ROOT / "tests" / "fixtures" / "snippets"
GOLDEN = ROOT / "tests" / "fixtures" / "golden"

EXTRA_PYLINT_FLAGS = {"suppressed.py": ["--enable=useless-suppression"]}

PYLINT_ASPECT = {"C": "readability", "E": "functionality", "F": "functionality",
                 "W": "reliability", "R": "maintainability"}
TOOL_ORDER = {"bandit": 0, "pylint": 1}


def run(argv, cwd):
    proc = subprocess.run(argv, cwd=cwd, capture_output=True, text=True, check=False)
    return {"command": argv, "exit_code": proc.returncode, "stdout": proc.stdout}


def version(tool):
    out = subprocess.run([tool, "--version"], capture_output=True, text=True, check=False).stdout
    return out.splitlines()[0] if out else "unavailable"


def expected_pylint(stdout):
    issues = []
    for msg in json.loads(stdout):
        code = msg["message-id"]
        category = code[0]
        if category == "I":
            continue
        line = max(1, msg["line"])
        end_line = msg.get("endLine")
        end_line = line if end_line is None else max(line, end_line)
        issues.append({
            "tool": "pylint",
            "code": code,
            "aspect": PYLINT_ASPECT[category],
            "severity": "E" if category == "F" else category,
            "message": f'{msg["message"]} ({msg["symbol"]})',
            "line": line,
            "end_line": end_line,
            "column": msg.get("column"),
        })
    return issues


def expected_bandit(stdout):
    issues = []
    for res in json.loads(stdout)["results"]:
        line = res["line_number"]
        issues.append({
            "tool": "bandit",
            "code": res["test_id"],
            "aspect": "security",
            "severity": res["issue_severity"],
            "message": res["issue_text"],
            "line": line,
            "end_line": max([line] + res.get("line_range", [])),
            "column": res.get("col_offset"),
        })
    return issues


def sort_key(issue):
    column = issue["column"]
    return (issue["line"], TOOL_ORDER[issue["tool"]], issue["code"],
            (0, 0) if column is None else (1, column), issue["message"])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.parse_args()
    GOLDEN.mkdir(parents=True, exist_ok=True)
    versions = {"bandit": version("bandit"), "pylint": version("pylint")}
    for snippet in sorted(SNIPPETS.glob("*.py")):
        extra = EXTRA_PYLINT_FLAGS.get(snippet.name, [])
        pylint = run(["pylint", "--output-format=json", "--score=n", *extra, snippet.name], SNIPPETS)
        bandit = run(["bandit", "-f", "json", "-q", snippet.name], SNIPPETS)
        pylint["extra_flags"] = extra
        expected = expected_pylint(pylint["stdout"])
        syntax_error = any(i["code"] == "E0001" for i in expected)
        if not syntax_error:
            expected += expected_bandit(bandit["stdout"])
        expected.sort(key=sort_key)
        doc = {
            "snippet": snippet.name,
            "tool_versions": versions,
            "pylint": pylint,
            "bandit": bandit,
            "syntax_error": syntax_error,
            "expected": expected,
        }
        (GOLDEN / (snippet.stem + ".json")).write_text(json.dumps(doc, indent=2) + "\n")
        print(f"{snippet.name}: {len(expected)} issue(s)")


if __name__ == "__main__":
    main()
