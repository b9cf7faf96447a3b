"""Prepare the documentation site: copy README and CHANGELOG, render tables and output schemas."""
import json
from os.path import abspath, dirname, join

import stopmax as smx
from stopmax.cli import SCHEMAS, output_schema


HERE = dirname(abspath(__file__))
DOCS = join(HERE, "../docs")
COPIES = [
    (join(HERE, "../README.md"), join(DOCS, "index.md")),
    (join(HERE, "../CHANGELOG.md"), join(DOCS, "changelog.md")),
]
TABLES = join(DOCS, "tables.md")
SCHEMA_PAGE = join(DOCS, "schemas.md")
HORIZONS = [1, 2, 3, 4, 5, 10, 15, 20, 30, 40, 50]


def gm_table():
    # type: () -> str
    numbers = smx.decision_numbers(max(HORIZONS))
    lines = [
        "## Game Max",
        "",
        "| n | optimal win probability | decision number b(n-1) |",
        "|---:|---:|---:|",
    ]
    for n in HORIZONS:
        lines.append(f"| {n} | {smx.gm_value(n):.6f} | {numbers.b[n - 1]:.6f} |")
    return "\n".join(lines)


def alpha_table():
    # type: () -> str
    d = smx.parse_dist_spec("duniform:1..10")
    lines = [
        "## Game Proportion of the Max on duniform:1..10, n = 2",
        "",
        "| alpha | first threshold | optimal win probability |",
        "|---:|---:|---:|",
    ]
    for i in range(1, 10):
        solution = smx.solve_discrete(d, smx.GameSpec(n=2, alpha=i / 10))
        lines.append(
            f"| {i / 10:.1f} | {solution.first_threshold():g} | {solution.optimal_value:.2f} |"
        )
    return "\n".join(lines)


def schemas():
    # type: () -> str
    lines = ["# Output Schemas", ""]
    for command in sorted(SCHEMAS):
        schema = json.dumps(output_schema(command), indent=2)
        lines += [f"## `{command}`", "", "```json", schema, "```", ""]
    return "\n".join(lines)


def main():
    """Copy README and CHANGELOG and write the reference tables and output schemas for mkdocs"""
    for src, dst in COPIES:
        with open(src, "rt", encoding="utf-8") as infile:
            text = infile.read()
        with open(dst, "wt", encoding="utf-8", newline="\n") as outf:
            outf.write(text)

    with open(TABLES, "wt", encoding="utf-8", newline="\n") as outf:
        outf.write("# Reference Tables\n\n" + gm_table() + "\n\n" + alpha_table() + "\n")

    with open(SCHEMA_PAGE, "wt", encoding="utf-8", newline="\n") as outf:
        outf.write(schemas())


if __name__ == "__main__":
    main()
