"""Command line surface: stats, acf, compare and synth subcommands.

Per-window moment reports stream as JSON lines; curves are written as one
JSON document plus a flat plot-ready CSV.  All numeric output uses the
shortest round-tripping decimal form, and identical inputs and flags yield
byte-identical outputs regardless of --threads.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import click

from . import lagstats, moments, synth, tape, windows
from .errors import DomainError, FormatError, NoDataError

_MODE_ALIASES = {"pv": "price_volume", "vv": "value_volume"}


def _threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("MBSTAT_THREADS")
    return max(1, int(env)) if env else 1


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise FormatError("config file must hold a JSON object")
    return cfg


def _merged(config: dict, **flags):
    """Flag values win over config entries; config fills unset flags."""
    out = {}
    for key, value in flags.items():
        out[key] = value if value is not None else config.get(key)
    return out


def _read_tape(path: str, fmt: str, epsilon: float) -> tape.TradeTape:
    with open(path, newline="") as fh:
        return tape.parse_csv(fh, format=fmt, epsilon=epsilon)


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _fail(exc: Exception) -> None:
    raise click.ClickException(str(exc))


@click.group()
def main():
    """Market-based trade-tape statistics."""


_common = [
    click.option("--input", "input_path", type=click.Path(exists=True), default=None),
    click.option("--output", "output_path", default=None),
    click.option(
        "--format", "fmt", type=click.Choice(list(tape.FORMATS)), default=None
    ),
    click.option("--epsilon", type=float, default=None),
    click.option("--window-n", type=int, default=None, help="odd window width in ticks"),
    click.option("--lag-step", type=int, default=None),
    click.option("--min-trades", type=int, default=None),
    click.option("--threads", type=int, default=None),
    click.option("--config", "config_path", type=click.Path(exists=True), default=None),
]


def _with_common(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


def _window_setup(cfg: dict):
    if cfg["input_path"] is None:
        raise click.ClickException("--input is required")
    fmt = cfg["fmt"] or "tick-value-volume"
    epsilon = cfg["epsilon"] if cfg["epsilon"] is not None else 1.0
    n = cfg["window_n"] if cfg["window_n"] is not None else 101
    step = cfg["lag_step"] if cfg["lag_step"] is not None else 1
    min_trades = cfg["min_trades"] if cfg["min_trades"] is not None else 1
    tp = _read_tape(cfg["input_path"], fmt, epsilon)
    spec = windows.WindowSpec(n_ticks=n, lag_step_ticks=step, min_trades=min_trades)
    return tp, spec


@main.command()
@_with_common
@click.option("--max-order", type=int, default=None, help="default 4, cap 8")
def stats(input_path, output_path, fmt, epsilon, window_n, lag_step, min_trades,
          threads, config_path, max_order):
    """Per-window moment reports as JSON lines."""
    try:
        config = _load_config(config_path)
        cfg = _merged(config, input_path=input_path, output_path=output_path, fmt=fmt,
                      epsilon=epsilon, window_n=window_n, lag_step=lag_step,
                      min_trades=min_trades, threads=threads, max_order=max_order)
        tp, spec = _window_setup(cfg)
        order = cfg["max_order"] if cfg["max_order"] is not None else 4
        wins = windows.plan_windows(tp, spec)
        valid = [w for w in wins if w.valid]
        if not valid:
            raise NoDataError("no valid windows on this tape")
        nthreads = _threads(cfg["threads"])

        def report_line(w):
            return json.dumps(moments.compute_report(w, tp, max_order=order).to_dict())

        if nthreads > 1:
            with ThreadPoolExecutor(max_workers=nthreads) as pool:
                lines = list(pool.map(report_line, valid))
        else:
            lines = [report_line(w) for w in valid]
        _write(cfg["output_path"], "\n".join(lines) + "\n")
        summary = {"windows": len(wins), "valid": len(valid),
                   "invalid_skipped": len(wins) - len(valid)}
        print(json.dumps(summary), file=sys.stderr)
    except (FormatError, NoDataError, DomainError, ValueError, OSError) as exc:
        _fail(exc)


@main.command()
@_with_common
@click.option("--max-lag", type=int, default=None, help="multiple of the lag step")
@click.option("--aggregate", type=click.Choice(["per-center", "mean"]), default=None)
@click.option("--threshold", type=float, default=None, help="scale detection fraction")
def acf(input_path, output_path, fmt, epsilon, window_n, lag_step, min_trades,
        threads, config_path, max_lag, aggregate, threshold):
    """Autocorrelation curve as JSON plus CSV (paths <output>.json/.csv)."""
    try:
        config = _load_config(config_path)
        cfg = _merged(config, input_path=input_path, output_path=output_path, fmt=fmt,
                      epsilon=epsilon, window_n=window_n, lag_step=lag_step,
                      min_trades=min_trades, threads=threads, max_lag=max_lag,
                      aggregate=aggregate, threshold=threshold)
        tp, spec = _window_setup(cfg)
        if cfg["max_lag"] is None:
            raise click.ClickException("--max-lag is required")
        curve = lagstats.acf_curve(
            tp,
            spec,
            max_lag_ticks=cfg["max_lag"],
            aggregate=cfg["aggregate"] or "per-center",
            threshold=cfg["threshold"] if cfg["threshold"] is not None else 0.05,
            threads=_threads(cfg["threads"]),
        )
        doc = json.dumps(curve.to_dict(), indent=2) + "\n"
        if cfg["output_path"] is None:
            sys.stdout.write(doc)
        else:
            base = cfg["output_path"]
            _write(base + ".json", doc)
            _write(base + ".csv", curve.to_csv())
    except (FormatError, NoDataError, DomainError, ValueError, OSError) as exc:
        _fail(exc)


@main.command()
@_with_common
@click.option("--max-order", type=int, default=None, help="default 4, cap 8")
def compare(input_path, output_path, fmt, epsilon, window_n, lag_step, min_trades,
            threads, config_path, max_order):
    """Per-window divergence of frequency vs market-based price moments."""
    try:
        config = _load_config(config_path)
        cfg = _merged(config, input_path=input_path, output_path=output_path, fmt=fmt,
                      epsilon=epsilon, window_n=window_n, lag_step=lag_step,
                      min_trades=min_trades, threads=threads, max_order=max_order)
        tp, spec = _window_setup(cfg)
        order = cfg["max_order"] if cfg["max_order"] is not None else 4
        valid = [w for w in windows.plan_windows(tp, spec) if w.valid]
        if not valid:
            raise NoDataError("no valid windows on this tape")
        lines = ["center_tick,n,freq_price,market_price,difference"]
        for w in valid:
            rep = moments.compute_report(w, tp, max_order=order)
            for i, n in enumerate(range(1, order + 1)):
                freq, market = rep.freq_price[i], rep.market_price[i]
                lines.append(f"{w.center_tick},{n},{freq!r},{market!r},{freq - market!r}")
        _write(cfg["output_path"], "\n".join(lines) + "\n")
    except (FormatError, NoDataError, DomainError, ValueError, OSError) as exc:
        _fail(exc)


@main.command("synth")
@click.option("--mode", type=click.Choice(["pv", "vv"]), default="pv")
@click.option("--len", "length", type=int, required=True)
@click.option("--tau-a", type=float, required=True, help="e-folding scale, ticks")
@click.option("--tau-b", type=float, required=True, help="e-folding scale, ticks")
@click.option("--sigma-a", type=float, default=0.1)
@click.option("--sigma-b", type=float, default=0.1)
@click.option("--mean-a", type=float, default=0.0)
@click.option("--mean-b", type=float, default=0.0)
@click.option("--seed", type=int, default=0)
@click.option("--epsilon", type=float, default=1.0)
@click.option("--output", "output_path", default=None)
def synth_cmd(mode, length, tau_a, tau_b, sigma_a, sigma_b, mean_a, mean_b, seed,
              epsilon, output_path):
    """Generate a synthetic tape as tick-value-volume CSV."""
    try:
        params = synth.SynthParams(
            mode=_MODE_ALIASES[mode],
            length_ticks=length,
            persistence_a_ticks=tau_a,
            persistence_b_ticks=tau_b,
            sigma_a=sigma_a,
            sigma_b=sigma_b,
            mean_a=mean_a,
            mean_b=mean_b,
            seed=seed,
            epsilon=epsilon,
        )
        _write(output_path, tape.emit_csv(synth.gen_tape(params)))
    except (ValueError, OSError) as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
