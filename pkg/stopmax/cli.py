"""*Command line interface*."""
import csv
import io
import json
import sys
from functools import wraps
from typing import Any, Dict, List, Literal, Optional

import click
from loguru import logger as log
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError
import stopmax as smx


__all__ = ["main", "RunConfig", "SCHEMAS", "output_schema"]


class RunConfig(BaseModel):
    """
    Parsed settings of a command run, recorded with every stochastic result.

    The worker count is left out: it never changes a result.
    """

    model_config = ConfigDict(frozen=True)

    command: str
    dist: Optional[str] = None
    n: Optional[int] = None
    alpha: Optional[float] = None
    delta: Optional[float] = None
    game: Optional[str] = None
    policy: Optional[str] = None
    grid: Optional[int] = None
    samples: Optional[int] = None
    seed: int = Field(..., ge=0)
    out: Literal["json", "csv"] = "json"


class GmTableRow(BaseModel):
    """One row of `gm-table`."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1, description="Horizon")
    value: float = Field(..., ge=0, description="Optimal Game Max win probability")
    decision_number: float = Field(..., ge=0, le=1, description="Decision number b(n - 1)")


class SolveTableRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int = Field(..., ge=1)
    state: float = Field(..., description="Running maximum")
    stop_value: float = Field(..., ge=0)
    continue_value: float = Field(..., ge=0)


class SolveResult(BaseModel):
    """Output of `solve`; `stop_region` for exact solves, `tables` with `--tables`."""

    model_config = ConfigDict(frozen=True)

    dist: str
    n: int = Field(..., ge=1)
    alpha: float = Field(..., gt=0, lt=1)
    method: Literal["exact", "grid"]
    value: float = Field(..., ge=0, description="Optimal win probability")
    threshold: float = Field(..., description="Smallest first observation worth stopping on")
    stop_region: Optional[List[float]] = Field(None, description="Step-1 stopping observations")
    tables: Optional[List[SolveTableRow]] = None


class SweepRow(BaseModel):
    """One row of `sweep`; closed-form columns only for uniform laws starting at 0 and n = 2."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., gt=0, lt=1)
    value: float = Field(..., ge=0)
    threshold: float
    closed_form_value: Optional[float] = None
    closed_form_threshold: Optional[float] = None


class CertaintyResult(smx.CertaintyReport):
    """Output of `certainty`."""

    dist: str


class SimulateResult(BaseModel):
    """JSON output of `simulate`."""

    model_config = ConfigDict(frozen=True)

    config: RunConfig
    report: smx.SimulationReport


class BoundDemoResult(BaseModel):
    """JSON output of `bound-demo`."""

    model_config = ConfigDict(frozen=True)

    config: RunConfig
    report: smx.GapReport


SCHEMAS = {
    "gm-table": List[GmTableRow],
    "solve": SolveResult,
    "sweep": List[SweepRow],
    "simulate": SimulateResult,
    "certainty": CertaintyResult,
    "bound-demo": BoundDemoResult,
}


def output_schema(command):
    # type: (str) -> Dict[str, Any]
    """
    JSON schema of the JSON output of a command.

    :param str command: Command name, one of `SCHEMAS`.
    :return: JSON schema (serialization mode, computed fields included).
    :rtype: dict
    """
    return TypeAdapter(SCHEMAS[command]).json_schema(mode="serialization")


class NumericFailure(click.ClickException):
    exit_code = 3


class DistParam(click.ParamType):
    name = "DIST"

    def convert(self, value, param, ctx):
        if isinstance(value, smx.Distribution):
            return value
        try:
            return smx.parse_dist_spec(value)
        except smx.DistributionSpecError as e:
            self.fail(str(e), param, ctx)


class AlphaGridParam(click.ParamType):
    """`start:stop:step` with `stop` included."""

    name = "START:STOP:STEP"

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        try:
            start, stop, step = (float(v) for v in value.split(":"))
        except ValueError:
            self.fail(f"Expected START:STOP:STEP, got {value!r}", param, ctx)
        if step <= 0 or stop < start:
            self.fail(f"Empty alpha grid {value!r}", param, ctx)
        count = int(round((stop - start) / step)) + 1
        alphas = [round(start + i * step, 12) for i in range(count)]
        if any(not 0 < a < 1 for a in alphas):
            self.fail(f"Every alpha must lie in (0, 1), got {value!r}", param, ctx)
        return alphas


DIST = DistParam()
ALPHA_GRID = AlphaGridParam()


def handle_errors(func):
    """Map library errors to usage errors (exit 2) and numeric failures (exit 3)."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (smx.ConvergenceError, smx.InstanceTooLargeError) as e:
            raise NumericFailure(str(e))
        except (smx.DistributionSpecError, smx.GameSpecError, ValidationError) as e:
            raise click.UsageError(str(e))

    return wrapper


def _number(value, precision, fixed):
    # type: (Any, int, bool) -> Any
    if isinstance(value, bool) or not isinstance(value, float) or precision < 0:
        return value
    if fixed:
        return f"{value:.{precision}f}"
    return round(value, precision)


def _rounded(obj, precision):
    if isinstance(obj, dict):
        return {k: _rounded(v, precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v, precision) for v in obj]
    return _number(obj, precision, fixed=False)


def emit(data, out, precision):
    # type: (Any, str, int) -> None
    """
    Write a result to stdout.

    :param data: A dict (one record) or a list of dicts (table).
    :param str out: `json` or `csv`.
    :param int precision: Decimal places (negative for full precision).
    """
    if out == "json":
        click.echo(json.dumps(_rounded(data, precision), indent=2))
        return
    rows = data if isinstance(data, list) else [data]  # type: List[Dict[str, Any]]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(
            {k: "" if v is None else _number(v, precision, fixed=True) for k, v in row.items()}
        )
    click.echo(buffer.getvalue(), nl=False)


def output_options(func):
    func = click.option(
        "--precision",
        type=int,
        default=lambda: smx.smx_opts.precision,
        show_default="6",
        help="Decimal places (negative for full precision).",
    )(func)
    func = click.option(
        "--out",
        type=click.Choice(["json", "csv"]),
        default=lambda: smx.smx_opts.out,
        show_default="json",
        help="Output format.",
    )(func)
    return func


def sampling_options(func):
    func = click.option(
        "--threads",
        type=click.IntRange(min=0),
        default=lambda: smx.smx_opts.threads,
        help="Worker threads (0 = one per CPU). Never changes results.",
    )(func)
    func = click.option(
        "--seed",
        type=click.IntRange(min=0),
        default=lambda: smx.smx_opts.seed,
        envvar="STOPMAX_SEED",
        show_default="0",
        help="Master seed.",
    )(func)
    func = click.option(
        "--samples",
        type=click.IntRange(min=1),
        default=lambda: smx.smx_opts.samples,
        show_default="1000000",
        help="Number of simulated trajectories.",
    )(func)
    return func


def grid_option(func):
    return click.option(
        "--grid",
        type=click.IntRange(min=2),
        default=None,
        help="Grid points for continuous laws (default 4096).",
    )(func)


@click.group()
@click.version_option(smx.__version__, prog_name=smx.APP_NAME)
@click.option("--verbose", "-v", is_flag=True, help="Log solver progress to stderr.")
def main(verbose):
    """Optimal stopping at the maximum and within a proportion of the maximum."""
    if verbose:
        log.remove()
        log.add(sys.stderr, level="DEBUG")


@main.command("gm-table")
@click.option("--max-n", type=click.IntRange(min=1), required=True, help="Largest horizon.")
@click.option("--grid", type=click.IntRange(min=2), default=None, help="Grid points (8192).")
@output_options
@handle_errors
def gm_table(max_n, grid, out, precision):
    """Optimal Game Max win probabilities and decision numbers for n = 1..MAX_N."""
    numbers = smx.decision_numbers(max_n)
    rows = [
        GmTableRow(n=n, value=smx.gm_value(n, grid), decision_number=numbers.b[n - 1])
        for n in range(1, max_n + 1)
    ]
    emit([row.model_dump() for row in rows], out, precision)


@main.command()
@click.option("--dist", type=DIST, required=True, help="Distribution spec.")
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Horizon.")
@click.option("--alpha", type=float, required=True, help="Proportion in (0, 1).")
@click.option("--tables", is_flag=True, help="Include the full stop and continuation tables.")
@grid_option
@output_options
@handle_errors
def solve(dist, n, alpha, tables, grid, out, precision):
    """Solve Game Proportion of the Max by backward induction."""
    solution = smx.solve(dist, smx.GameSpec(n=n, alpha=alpha), grid)
    first = solution.stop_value[0] >= solution.continue_value[0] - smx.smx_opts.tie_tol
    rows = None
    if tables:
        rows = [
            SolveTableRow(
                step=k,
                state=float(solution.state_values[i]),
                stop_value=float(solution.stop_value[k - 1][i]),
                continue_value=float(solution.continue_value[k - 1][i]),
            )
            for k in range(1, n + 1)
            for i in range(len(solution.state_grid))
        ]
    result = SolveResult(
        dist=dist.text,
        n=n,
        alpha=alpha,
        method=solution.method,
        value=solution.optimal_value,
        threshold=solution.first_threshold(),
        stop_region=solution.state_values[first].tolist() if solution.method == "exact" else None,
        tables=rows,
    )
    if out == "json":
        emit(result.model_dump(exclude_none=True), out, precision)
    elif tables:
        emit([row.model_dump() for row in rows], out, precision)
    else:
        emit(result.model_dump(exclude={"stop_region", "tables"}), out, precision)


@main.command()
@click.option("--dist", type=DIST, default="uniform:0,1", show_default=True, help="Spec.")
@click.option("--n", "n", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--alpha-grid", type=ALPHA_GRID, default="0.1:0.9:0.1", show_default=True)
@grid_option
@click.option("--out", type=click.Choice(["json", "csv"]), default="csv", show_default=True)
@click.option("--precision", type=int, default=lambda: smx.smx_opts.precision)
@handle_errors
def sweep(dist, n, alpha_grid, grid, out, precision):
    """Optimal alpha-game value over a range of proportions."""
    closed = n == 2 and isinstance(dist, smx.UniformDistribution) and dist.support_min == 0
    rows = []
    for alpha in alpha_grid:
        solution = smx.solve(dist, smx.GameSpec(n=n, alpha=alpha), grid)
        threshold, value = smx.uniform_n2_closed_form(alpha) if closed else (None, None)
        if threshold is not None:
            threshold *= dist.support_max
        rows.append(
            SweepRow(
                alpha=alpha,
                value=solution.optimal_value,
                threshold=solution.first_threshold(),
                closed_form_value=value,
                closed_form_threshold=threshold,
            )
        )
    emit([row.model_dump() for row in rows], out, precision)


@main.command()
@click.option("--dist", type=DIST, required=True, help="Distribution spec.")
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Horizon.")
@click.option("--alpha", type=float, default=None, help="Proportion (alpha game, optimal).")
@click.option("--game", type=click.Choice(["max", "alpha"]), default="max", show_default=True)
@click.option("--policy", type=click.Choice(["gm", "optimal"]), default="gm", show_default=True)
@grid_option
@sampling_options
@output_options
@handle_errors
def simulate(dist, n, alpha, game, policy, grid, samples, seed, threads, out, precision):
    """Monte Carlo win probability of a policy."""
    if alpha is None and (game == "alpha" or policy == "optimal"):
        raise click.UsageError("--alpha is required for --game alpha and --policy optimal")
    if policy == "gm":
        rule = smx.gm_policy(n)
    else:
        rule = smx.alpha_policy(smx.solve(dist, smx.GameSpec(n=n, alpha=alpha), grid))
    report = smx.simulate(dist, rule, "max" if game == "max" else alpha, samples, seed, threads)
    if out == "csv":
        emit(dict(dist=dist.text, n=n, policy=policy, **report.model_dump()), out, precision)
        return
    config = RunConfig(
        command="simulate",
        dist=dist.text,
        n=n,
        alpha=alpha,
        game=game,
        policy=policy,
        grid=grid,
        samples=samples,
        seed=seed,
        out=out,
    )
    emit(SimulateResult(config=config, report=report).model_dump(), out, precision)


@main.command()
@click.option("--dist", type=DIST, required=True, help="Distribution spec.")
@click.option("--alpha", type=float, required=True, help="Proportion in (0, 1).")
@output_options
@handle_errors
def certainty(dist, alpha, out, precision):
    """Check whether the alpha game is won with certainty."""
    report = smx.certainty_report(dist, alpha)
    record = dict(dist=dist.text, **report.model_dump())
    if out == "csv":
        interval = record.pop("interval") or (None, None)
        record["interval_low"], record["interval_high"] = interval
    emit(record, out, precision)


@main.command("bound-demo")
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Horizon.")
@click.option("--alpha", type=float, required=True, help="Proportion in (0, 1).")
@click.option("--delta", type=float, default=None, help="Target gap (spread-out law).")
@click.option("--dist", type=DIST, default=None, help="Explore this law instead.")
@grid_option
@sampling_options
@output_options
@handle_errors
def bound_demo(n, alpha, delta, dist, grid, samples, seed, threads, out, precision):
    """Gap between both games under the alpha-optimal policy."""
    if dist is None:
        if delta is None:
            raise click.UsageError("--delta is required without --dist")
        report = smx.gap_demo(n, alpha, delta, samples, seed, threads, grid)
    else:
        spec = smx.GameSpec(n=n, alpha=alpha)
        report = smx.gap_explore(dist, spec, samples, seed, threads, grid)
    if out == "csv":
        emit(report.model_dump(), out, precision)
        return
    config = RunConfig(
        command="bound-demo",
        dist=report.dist,
        n=n,
        alpha=alpha,
        delta=delta,
        grid=grid,
        samples=report.samples,
        seed=report.seed,
        out=out,
    )
    emit(BoundDemoResult(config=config, report=report).model_dump(), out, precision)


@main.command()
@click.argument("command", type=click.Choice(sorted(SCHEMAS)))
def schema(command):
    """Print the JSON schema of the JSON output of COMMAND."""
    click.echo(json.dumps(output_schema(command), indent=2))


if __name__ == "__main__":  # pragma: no cover
    main()
