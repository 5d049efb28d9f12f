"""Command-line interface."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import approx, bench, hashing
from .groups import build_group
from .su2 import Gate, format_gate, named_gate, parse_gate
from .weave import count_weaves, count_weaves_closed_form, count_weaves_upto, format_word

log = logging.getLogger("weavehash")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _parse_target(tokens: list[str]) -> Gate:
    if len(tokens) == 1 and tokens[0].startswith("named:"):
        return named_gate(tokens[0][len("named:"):])
    return parse_gate(" ".join(tokens))


def _config(path: str | None) -> hashing.HashConfig:
    return hashing.load_config(path) if path else hashing.default_config()


def cmd_count_weaves(args) -> int:
    L = args.L
    print(f"L={L}")
    print(f"exact={count_weaves(L)}")
    print(f"cumulative={count_weaves_upto(L)}")
    print(f"closed_form={_fmt(count_weaves_closed_form(L))}")
    return 0


def cmd_build_pseudogroup(args) -> int:
    G = build_group(args.group)

    def progress(k, res):
        log.info("element %d/%d error %.3e complete=%s", k, G.order - 1, res.error, res.complete)

    p = approx.build_pseudogroup(G, args.L, args.mode, progress=progress)
    approx.save_pseudogroup(p, args.out)
    print(f"group={p.group_name} L={p.L} mean={_fmt(p.mean_error)} min={_fmt(p.min_error)} "
          f"max={_fmt(p.max_error)} complete={int(all(p.complete))}")
    return 0


def cmd_hash(args) -> int:
    cfg = _config(args.config)
    target = _parse_target(args.target)
    res = hashing.hash_target(target, cfg, tail=not args.no_tail)
    print(f"word {format_word(res.word)}")
    print(f"error {_fmt(res.error)}")
    print(f"{'stage':<6} {'L':>4} {'error':>24} tail")
    for r in res.trace:
        print(f"{r.stage:<6} {r.L:>4} {_fmt(r.error):>24} {int(r.tail_used)}")
    print(f"target={format_gate(target)}")
    print(f"final_error={_fmt(res.error)}")
    print(f"word_length={res.word.length}")
    print(f"unreduced_length={res.unreduced_length}")
    for r in res.trace:
        print(f"{r.stage}.error={_fmt(r.error)}")
    return 0


def cmd_trials(args) -> int:
    cfg = _config(args.config)
    rep = bench.run_trials(cfg, args.count, args.seed, tail=not args.no_tail)
    paths = rep.write(args.out)
    if len(rep.stages) >= 3:
        p = Path(args.out) / "scaling.csv"
        _write(p, bench.scaling_report(rep).to_csv())
        paths.append(p)
    sys.stdout.write(rep.summary_text())
    return 0


def cmd_calibrate(args) -> int:
    cfg = _config(args.config).without_tail()
    targets = [bench.haar_random_gate(bench.trial_rng(args.seed, i)) for i in range(args.count)]
    new = hashing.calibrate_tail(cfg, targets)
    _write(args.out, new.to_text())
    sys.stdout.write(new.to_text())
    return 0


def cmd_mesh_stats(args) -> int:
    p = approx.load_pseudogroup(args.pseudogroup)
    mesh = hashing.build_mesh(p, args.n)
    d = mesh.identity_distances()[1:]
    rng = np.random.default_rng(args.seed)
    sample = d if len(d) <= args.sample else rng.choice(d, size=args.sample, replace=False)
    fit = bench.wigner_dyson_test(sample)
    edges, counts = bench.log_histogram(d)
    centers = np.sqrt(edges[:-1] * edges[1:])
    density = counts / (counts.sum() * np.diff(edges))
    wd = bench.wigner_dyson_pdf(centers, mesh.s0)
    lines = [
        f"# items={len(mesh)} s0={_fmt(mesh.s0)} ks_statistic={_fmt(fit.ks_statistic)} "
        f"p_value={_fmt(fit.p_value)} passed={int(fit.passed)}",
        "bin_center,count,density,wigner_dyson",
    ]
    lines += [f"{_fmt(c)},{int(k)},{_fmt(x)},{_fmt(w)}" for c, k, x, w in zip(centers, counts, density, wd)]
    _write(args.out, "\n".join(lines) + "\n")
    print(lines[0][2:])
    return 0


def cmd_bf_baseline(args) -> int:
    text = bench.baseline_csv(args.L)
    _write(args.out, text)
    print(text.splitlines()[0][2:])
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weavehash", description="Fibonacci-anyon weave compiler")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count-weaves", help="number of canonical weaves of length L")
    p.add_argument("--L", type=int, required=True)
    p.set_defaults(func=cmd_count_weaves)

    p = sub.add_parser("build-pseudogroup", help="approximate every group element by a weave")
    p.add_argument("--group", choices=["icosahedral", "cubic"], required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--mode", choices=["exhaustive", "mitm"], required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_pseudogroup)

    p = sub.add_parser("hash", help="compile one target gate")
    p.add_argument("--target", nargs="+", required=True, help="8 floats or named:iY|X|Z|H")
    p.add_argument("--config")
    p.add_argument("--no-tail", action="store_true")
    p.set_defaults(func=cmd_hash)

    p = sub.add_parser("trials", help="hash Haar-random targets and collect statistics")
    p.add_argument("--config")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--no-tail", action="store_true")
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("calibrate", help="estimate tail-correction thresholds")
    p.add_argument("--config")
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("mesh-stats", help="distance statistics of a mesh")
    p.add_argument("--pseudogroup", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--sample", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mesh_stats)

    p = sub.add_parser("bf-baseline", help="analytic brute-force error model")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bf_baseline)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
