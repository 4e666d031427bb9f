"""Command-line entry point: ``stratmark <command> ...``.

Exit status: 0 success (for ``detect``: no watermark detected), 1 runtime
error or failed check, 2 usage error, 3 watermark detected, 4 insufficient
data to decide.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import shlex
import sys
from pathlib import Path

from . import __version__
from .chessrules import FenError, Position, apply_move, divide, parse_fen, parse_pgn, perft
from .chessrules.pgn import PgnError
from .detect import DEFAULT_THRESHOLD, TraceError, analyze, read_trace
from .plot import line_chart
from .uci.proxy import KEY_ENV, ProxyConfig, run_proxy
from .watermark import ContractError, WatermarkParams

log = logging.getLogger("stratmark")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_DETECTED = 3
EXIT_INSUFFICIENT = 4


class UsageError(Exception):
    pass


def _read_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if path is not None and not cp.read(path):
        raise UsageError(f"cannot read config file {path}")
    return cp


def _params(args, cp: configparser.ConfigParser | None = None) -> WatermarkParams:
    """Watermark parameters from ``[watermark]`` with command-line overrides; key from the environment."""
    sec = cp["watermark"] if cp is not None and "watermark" in cp else {}
    key_env = args.key_env or (sec.get("key_env") if sec else None) or KEY_ENV

    def pick(name, default, conv):
        v = getattr(args, name, None)
        if v is not None:
            return v
        return conv(sec.get(name, default)) if sec else default

    try:
        return WatermarkParams(
            gamma=pick("gamma", 0.25, float),
            delta=pick("delta", 0.5, float),
            key=os.environ.get(key_env, "").encode("utf-8"),
            min_branching=pick("min_branching", 2, int),
        )
    except (ContractError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _add_watermark_args(p: argparse.ArgumentParser, delta: bool = True) -> None:
    g = p.add_argument_group("watermark")
    g.add_argument("--gamma", type=float, help="green-list fraction (default 0.25)")
    if delta:
        g.add_argument("--delta", type=float, help="hardness in value units (default 0.5)")
    g.add_argument("--min-branching", dest="min_branching", type=int,
                   help="pass through decisions with fewer actions (default 2)")
    g.add_argument("--key-env", help=f"environment variable holding the secret key (default {KEY_ENV})")


# -- wrap ------------------------------------------------------------------------------


def cmd_wrap(args) -> int:
    cp = _read_config(args.config)
    if args.engine is None and "proxy" not in cp:
        raise UsageError("wrap needs --engine or a config file with a [proxy] section")
    if "proxy" not in cp:
        cp["proxy"] = {}
    if args.engine is not None:
        cp["proxy"]["engine"] = args.engine
    if args.multipv_cap is not None:
        cp["proxy"]["multipv_cap"] = str(args.multipv_cap)
    if args.trace is not None:
        cp["proxy"]["trace"] = args.trace
    try:
        config = ProxyConfig.from_parser(cp)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    config.params = _params(args, cp)
    return run_proxy(config, sys.stdin, sys.stdout)


# -- detect ----------------------------------------------------------------------------


def _load_records(args):
    if args.trace:
        try:
            with open(args.trace) as fp:
                return list(read_trace(fp))
        except OSError as exc:
            raise UsageError(f"cannot read trace: {exc}") from exc
    text = Path(args.pgn).read_text()
    records = []
    for i, game in enumerate(parse_pgn(text), 1):
        records.extend(game.records(i))
    return records


def cmd_detect(args) -> int:
    cp = _read_config(args.config)
    params = _params(args, cp)
    try:
        records = _load_records(args)
    except (PgnError, FenError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    players = sorted({str(r.player) for r in records})
    player = args.player
    if player is None and len(players) > 1:
        raise UsageError("records belong to several players; choose one with --player "
                         f"({', '.join(players)})")
    if player is not None:
        records = [r for r in records if str(r.player) == player]
        if not records:
            print(f"no records for player {player!r} (have: {', '.join(players)})", file=sys.stderr)
    report = analyze(records, params, player=None, threshold=args.threshold)
    if player is not None:
        print(f"player: {player}")
    print(report.summary())
    crossing = report.first_crossing(by="round")
    if crossing is not None:
        print(f"threshold first reached after round {crossing.round} (n = {crossing.n})")
    if args.csv:
        Path(args.csv).write_text(report.to_csv(by=args.by))
    if args.svg:
        pts = report.by_move if args.by == "move" else report.by_round
        xs = [pt.n for pt in pts] if args.by == "move" else [pt.round for pt in pts]
        Path(args.svg).write_text(line_chart(
            {player or "z": list(zip(xs, [pt.z for pt in pts]))},
            title="cumulative z", xlabel="decisions" if args.by == "move" else "round",
            ylabel="z", hline=args.threshold))
    if report.insufficient:
        return EXIT_INSUFFICIENT
    return EXIT_DETECTED if report.detected else EXIT_OK


# -- match / ablate ----------------------------------------------------------------------


def _match_config(args):
    from .harness import EngineSpec, MatchConfig, TimeControl

    overrides = dict(rounds=args.rounds, workers=args.workers, ply_cap=args.ply_cap,
                     out_dir=args.out, book=args.book)
    try:
        if args.tc is not None:
            overrides["time_control"] = TimeControl.parse(args.tc)
        if args.config:
            cfg = MatchConfig.from_file(args.config, **overrides)
            if any(getattr(args, k, None) is not None for k in ("gamma", "delta", "min_branching", "key_env")):
                params = _params(args, _read_config(args.config))
                for side in (cfg.side_a, cfg.side_b):
                    if side.params is not None:
                        side.params = params
            return cfg
        if args.engine is None:
            raise UsageError("match needs --config or --engine")
        params = _params(args)
        opts = dict(o.split("=", 1) for o in args.option or [])
        wm = EngineSpec(f"{args.name}-wm", shlex.split(args.engine), opts, params, policy=args.policy, k=args.k)
        plain = EngineSpec(args.name, shlex.split(args.engine), dict(opts))
        overrides.setdefault("time_control", None)
        kw = {k: v for k, v in overrides.items() if v is not None}
        return MatchConfig(wm, plain, **kw)
    except (ValueError, FileNotFoundError) as exc:
        raise UsageError(str(exc)) from exc


def _add_match_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="match config file ([match], [side.a], [side.b], [watermark])")
    p.add_argument("--engine", help="engine command for a watermarked-vs-plain self match")
    p.add_argument("--name", default="engine", help="player name for --engine (default: engine)")
    p.add_argument("--option", action="append", metavar="NAME=VALUE", help="UCI option for --engine")
    p.add_argument("--policy", default="watermarked", choices=["watermarked", "topk"],
                   help="policy of the modified side for --engine")
    p.add_argument("-k", type=int, default=3, help="k for the top-k policy (default 3)")
    p.add_argument("--rounds", type=int)
    p.add_argument("--tc", help="movetime=MS | nodes=N | depth=D | MOVES/SECONDS")
    p.add_argument("--book", help="opening book, one FEN or EPD per line")
    p.add_argument("--ply-cap", dest="ply_cap", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")
    _add_watermark_args(p)


def cmd_match(args) -> int:
    cfg = _match_config(args)

    def progress(r):
        log.info("round %d: %s (%s, %d plies)", r.index + 1, r.result, r.termination, len(r.game.moves))

    from .harness import play_match

    report = play_match(cfg, threshold=args.threshold, progress=progress)
    print(report.summary())
    if cfg.out_dir is not None and report.rounds:
        series = {}
        for which in ("a", "b"):
            spec, det, _ = report.side(which)
            series[spec.name] = [(pt.round, pt.z) for pt in det.by_round]
        Path(cfg.out_dir, "z_by_round.svg").write_text(line_chart(
            series, title="cumulative z by round", xlabel="round", ylabel="z", hline=args.threshold))
        print(f"outputs written to {cfg.out_dir}")
    return EXIT_OK if report.complete else EXIT_ERROR


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def cmd_ablate(args) -> int:
    from .harness import SyntheticMatch, ablate

    gammas, deltas = _floats(args.gammas), _floats(args.deltas)
    if args.synthetic:
        backend = SyntheticMatch(rounds=args.rounds or 100, decisions=args.decisions, seed=args.seed)
        key = _params(args).key
    else:
        backend = _match_config(args)
        key = backend.detection_params.key
    res = ablate(gammas, deltas, backend, key=key, out_dir=None if args.synthetic else args.out)
    text = res.to_csv()
    if args.csv:
        Path(args.csv).write_text(text)
    sys.stdout.write(text)
    return EXIT_ERROR if any(c.error for c in res.cells) else EXIT_OK


# -- verify / perft / vectors ----------------------------------------------------------------


def cmd_verify(args) -> int:
    from .verify import run_suite

    results = run_suite(quick=args.quick, seed=args.seed)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "SOME CHECKS FAILED")
    return EXIT_OK if ok else EXIT_ERROR


def cmd_perft(args) -> int:
    if args.depth < 0:
        raise UsageError("depth must be >= 0")
    try:
        pos = Position.start() if args.fen in (None, "startpos") else parse_fen(args.fen)
        for m in args.moves or []:
            pos = apply_move(pos, m)
    except (FenError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    if args.divide:
        counts = divide(pos, args.depth)
        for move in sorted(counts):
            print(f"{move}: {counts[move]}")
        print(f"total: {sum(counts.values())}")
    else:
        print(perft(pos, args.depth))
    return EXIT_OK


def cmd_vectors(args) -> int:
    from .vectors import dumps

    key = os.environ.get(args.key_env or KEY_ENV, "").encode("utf-8") if args.with_key else b""
    text = dumps(key)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stratmark", description="Watermarking game-playing agents.")
    parser.add_argument("--version", action="version", version=f"stratmark {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wrap", help="serve UCI on stdin/stdout, watermarking a wrapped engine")
    p.add_argument("--config", help="proxy config file ([proxy], [watermark])")
    p.add_argument("--engine", help="engine command (overrides the config)")
    p.add_argument("--multipv-cap", dest="multipv_cap", type=int, help="score at most this many moves")
    p.add_argument("--trace", help="append decision records (JSON lines) to this file")
    _add_watermark_args(p)
    p.set_defaults(func=cmd_wrap)

    p = sub.add_parser("detect", help="test recorded play for the watermark")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pgn", help="PGN file; players are named by the White/Black tags")
    src.add_argument("--trace", help="trace file (JSON lines)")
    p.add_argument("--player", help="only count decisions of this player")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD, help="z threshold (default 4)")
    p.add_argument("--config", help="config file with a [watermark] section")
    p.add_argument("--csv", help="write the cumulative z trace here")
    p.add_argument("--by", choices=["move", "round"], default="move", help="trace granularity for CSV/SVG")
    p.add_argument("--svg", help="write a z-curve chart here")
    _add_watermark_args(p, delta=False)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("match", help="play a match between two engines")
    _add_match_args(p)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("ablate", help="run a gamma/delta grid of matches")
    _add_match_args(p)
    p.add_argument("--gammas", default="0.1,0.25,0.5,0.75")
    p.add_argument("--deltas", default="0.5,2,10")
    p.add_argument("--synthetic", action="store_true", help="use synthetic decision streams, not engines")
    p.add_argument("--decisions", type=int, default=40, help="decisions per synthetic round")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", help="write the table here as well as to stdout")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("verify", help="check the loss bounds and consistency on small games")
    p.add_argument("--quick", action="store_true", help="smaller grids")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("perft", help="count leaf nodes of the legal move tree")
    p.add_argument("depth", type=int)
    p.add_argument("--fen", help="start position (default: the initial position)")
    p.add_argument("--moves", nargs="*", help="UCI moves to play first")
    p.add_argument("--divide", action="store_true", help="print counts per root move")
    p.set_defaults(func=cmd_perft)

    p = sub.add_parser("vectors", help="print golden hash and partition vectors as JSON")
    p.add_argument("--out")
    p.add_argument("--with-key", action="store_true", help="use the key from the environment for chess vectors")
    p.add_argument("--key-env")
    p.set_defaults(func=cmd_vectors)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stratmark {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TraceError, ContractError) as exc:
        print(f"stratmark {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, RuntimeError) as exc:
        print(f"stratmark {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
