"""Command-line entry point: ``clusterqis <command> [flags]``.

Exit status: 0 all checks pass, 1 check or fixture failure, 2 usage error,
3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .audit import audit_sweep
from .cluster import ChannelSource, build_channel, build_circuit_form, build_product_form, circuit_json
from .protocol import (
    LockingVariant,
    ProtocolConfig,
    SecretState,
    assign_parties,
    enumerate_protocol_branches,
    lock,
    prepare_joint_state,
    unlock_bob1,
)
from .security import scan_all_parties, security_scan
from .serialize import FIXTURE_VERSION, dumps, emit_report, read_artifact, state_to_json, with_version
from .synthesis import (
    CorrectionTable,
    candidate_configs,
    evaluate_config,
    outcome_distribution,
    synthesize_escalating,
    variant_sweep,
)

log = logging.getLogger("clusterqis")

COMMANDS = ("generate", "run", "synthesize", "audit", "verify", "security", "sweep")
PROTOCOL_COMMANDS = set(COMMANDS) - {"generate"}
FIDELITY_TOL = 1e-9
FIXTURE_TOL = 1e-9
FIXTURE_DIR = Path(__file__).parent / "fixtures" / f"v{FIXTURE_VERSION}"
DECODER_N = {"eq6": 5, "eq8": 6}

BOB1_FLAGS = {"cnot": "cnot_then_measure", "cnot-h": "cnot_then_hadamards", "cz-h": "cz_then_hadamards"}
SOURCE_FLAGS = {"product": ChannelSource.PRODUCT, "circuit": ChannelSource.CIRCUIT,
                "reference": ChannelSource.REFERENCE, "dressed": ChannelSource.DRESSED}
LAYOUT_FLAGS = {"target-h": "target_h", "bell": "bell"}

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    n: int = 5
    source: str = "sweep"
    variant_h_psi1: str = "sweep"
    bob1_style: str = "sweep"
    lock_layout: str = "sweep"
    schedule: str = "sweep"
    decoder: str = "table"
    party: str = "all"
    table: str | None = None
    secrets: int = 10
    pairs: int = 50
    seed: int = 0
    secret: tuple[float, ...] | None = None
    out: str | None = None
    fixtures: str | None = None
    regen_fixtures: bool = False

    def to_json(self) -> dict:
        d = asdict(self)
        d["secret"] = None if self.secret is None else list(self.secret)
        return d


def _csv_floats(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")
    if len(values) != 8:
        raise argparse.ArgumentTypeError(f"--secret takes 8 reals (re,im for alpha, mu, gamma, beta), got {len(values)}")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clusterqis", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--source", choices=[*SOURCE_FLAGS, "sweep"], default="sweep")
    p.add_argument("--variant-h-psi1", choices=["on", "off", "sweep"], default="sweep")
    p.add_argument("--bob1-style", choices=[*BOB1_FLAGS, "sweep"], default="sweep")
    p.add_argument("--lock-layout", choices=[*LAYOUT_FLAGS, "sweep"], default="sweep")
    p.add_argument("--schedule", choices=["standard", "relay", "sweep"], default="sweep")
    p.add_argument("--decoder", choices=["eq6", "eq8", "table"], default="table")
    p.add_argument("--party", default="all", help="security: bob1, bob2, ..., charlie or all")
    p.add_argument("--table", help="correction table JSON to use instead of synthesizing one")
    p.add_argument("--secrets", type=int, default=10, help="random secrets per verify run")
    p.add_argument("--pairs", type=int, default=50, help="secret pairs per security scan")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--secret", type=_csv_floats, help="8 reals: re,im of alpha, mu, gamma, beta")
    p.add_argument("--out", help="write the JSON artifact here instead of stdout")
    p.add_argument("--fixtures", help="fixture directory (default: the packaged one)")
    p.add_argument("--regen-fixtures", action="store_true", help="rewrite every pinned fixture, then exit")
    return p


def parse_config(argv: list[str]) -> RunConfig:
    """Parse and validate; usage errors exit with status 2."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig(**vars(ns))
    if cfg.command in PROTOCOL_COMMANDS and cfg.n < 5:
        parser.error(f"--n: {cfg.command} needs N >= 5, got {cfg.n}")
    if cfg.command == "generate" and not 2 <= cfg.n <= 16:
        parser.error(f"--n: generate supports N in 2..16, got {cfg.n}")
    if cfg.decoder in DECODER_N and cfg.command in ("verify", "audit") and cfg.n != DECODER_N[cfg.decoder]:
        parser.error(f"--decoder {cfg.decoder} is the N={DECODER_N[cfg.decoder]} decoder, got --n {cfg.n}")
    if cfg.command == "audit" and cfg.decoder == "table":
        parser.error("--decoder: audit compares eq6 or eq8 against a table")
    for name in ("secrets", "pairs"):
        if getattr(cfg, name) < 1:
            parser.error(f"--{name} must be positive")
    return cfg


# -- configuration resolution -------------------------------------------------


def _candidates(cfg: RunConfig) -> list[ProtocolConfig]:
    def pick(value, table=None):
        if value == "sweep":
            return None
        return [table[value] if table else value]

    configs = candidate_configs(
        cfg.n,
        sources=pick(cfg.source, SOURCE_FLAGS),
        schedules=pick(cfg.schedule),
        layouts=pick(cfg.lock_layout, LAYOUT_FLAGS),
        h_psi1=None if cfg.variant_h_psi1 == "sweep" else [cfg.variant_h_psi1 == "on"],
        bob1_styles=pick(cfg.bob1_style, BOB1_FLAGS),
    )
    if cfg.variant_h_psi1 != "sweep":
        # the Bell layout forces the psi_1 Hadamard on
        configs = [c for c in configs if c.variant.h_on_psi1 == (cfg.variant_h_psi1 == "on")]
    return configs


def resolve_protocol(cfg: RunConfig) -> tuple[ProtocolConfig, CorrectionTable, bool]:
    """First deterministic candidate allowed by the flags, else the first candidate."""
    candidates = _candidates(cfg)
    if not candidates:
        raise ValueError("no protocol configuration matches the given flags")
    for pc in candidates:
        entry, table = evaluate_config(pc)
        if entry.deterministic:
            return pc, table, True
    pc = candidates[0]
    return pc, synthesize_escalating(pc), False


def load_table(path: str) -> CorrectionTable:
    return CorrectionTable.from_json(read_artifact(path))


def _secret(cfg: RunConfig, rng: np.random.Generator) -> SecretState:
    return SecretState.random(rng) if cfg.secret is None else SecretState.from_reals(cfg.secret)


# -- commands -----------------------------------------------------------------


def cmd_generate(cfg: RunConfig) -> tuple[dict, bool]:
    source = SOURCE_FLAGS.get(cfg.source, ChannelSource.CIRCUIT)
    if source is ChannelSource.PRODUCT:
        state = build_product_form(cfg.n)
    elif source is ChannelSource.CIRCUIT:
        state = build_circuit_form(cfg.n)
    else:
        state = build_channel(cfg.n, source)
    report = {"state": state_to_json(state)}
    if source in (ChannelSource.PRODUCT, ChannelSource.CIRCUIT):
        report["circuit"] = circuit_json(cfg.n)
        if cfg.n >= 5:
            sched = "standard" if cfg.schedule == "sweep" else cfg.schedule
            report["redistributed"] = {"schedule": sched, "state": state_to_json(build_channel(cfg.n, source, sched))}
    return report, True


def cmd_run(cfg: RunConfig) -> tuple[dict, bool]:
    pc, table, det = _protocol_and_table(cfg)
    rng = np.random.default_rng(cfg.seed)
    secret = _secret(cfg, rng)
    branches = _branches(cfg, pc, table, secret)
    live = [b for b in branches if b.fidelity is not None]
    probs = np.array([b.probability for b in live])
    pick = live[int(rng.choice(len(live), p=probs / probs.sum()))]
    ok = pick.fidelity >= 1 - FIDELITY_TOL
    return {
        "protocol": pc.to_json(),
        "protocol_tag": pc.tag,
        "deterministic_configuration": det,
        "secret": list(secret.coefficients()),
        "transcript": pick.transcript.encode(),
        "probability": pick.probability,
        "correction": list(pick.correction.tokens),
        "fidelity": pick.fidelity,
        "passed": ok,
    }, ok


def cmd_synthesize(cfg: RunConfig) -> tuple[dict, bool]:
    pc, table, det = _protocol_and_table(cfg)
    return {**table.to_json(), "protocol_tag": pc.tag, "deterministic_configuration": det}, det


def cmd_verify(cfg: RunConfig) -> tuple[dict, bool]:
    pc, table, det = _protocol_and_table(cfg)
    rng = np.random.default_rng(cfg.seed)
    secrets = [_secret(cfg, rng)] if cfg.secret is not None else [SecretState.random(rng) for _ in range(cfg.secrets)]
    rows: dict[str, dict] = {}
    for s in secrets:
        for b in _branches(cfg, pc, table, s):
            key = b.transcript.encode()
            row = rows.setdefault(key, {"transcript": key, "probabilities": [], "min_fidelity": None,
                                        "correction": None if b.correction is None else list(b.correction.tokens)})
            row["probabilities"].append(b.probability)
            if b.fidelity is not None:
                prev = row["min_fidelity"]
                row["min_fidelity"] = b.fidelity if prev is None else min(prev, b.fidelity)
    out_rows = []
    for row in rows.values():
        p = row.pop("probabilities")
        row["probability_min"], row["probability_max"] = min(p), max(p)
        out_rows.append(row)
    live = [r["min_fidelity"] for r in out_rows if r["min_fidelity"] is not None]
    worst = min(live) if live else None
    ok = worst is not None and worst >= 1 - FIDELITY_TOL
    return {
        "protocol": pc.to_json(),
        "protocol_tag": pc.tag,
        "decoder": cfg.decoder,
        "secrets": len(secrets),
        "rows": out_rows,
        "row_count": len(out_rows),
        "min_fidelity": worst,
        "passed": ok,
    }, ok


def cmd_audit(cfg: RunConfig) -> tuple[dict, bool]:
    pc, table, _ = _protocol_and_table(cfg)
    return {"protocol_tag": pc.tag, **audit_sweep(table, cfg.decoder)}, True


def cmd_security(cfg: RunConfig) -> tuple[dict, bool]:
    pc, _, _ = resolve_protocol(cfg)
    if cfg.party == "all":
        reports = scan_all_parties(pc, cfg.pairs, cfg.seed)
    else:
        reports = {cfg.party: security_scan(pc, cfg.party, cfg.pairs, cfg.seed)}
    return {"protocol": pc.to_json(), "protocol_tag": pc.tag,
            "parties": {k: r.to_json() for k, r in reports.items()}}, True


def cmd_sweep(cfg: RunConfig) -> tuple[dict, bool]:
    report = variant_sweep(cfg.n, _candidates(cfg))
    return report.to_json(), True


def _protocol_and_table(cfg: RunConfig):
    if cfg.table:
        table = load_table(cfg.table)
        if table.n != cfg.n:
            raise ValueError(f"--table is for N={table.n}, but --n is {cfg.n}")
        return table.config, table, table.complete
    return resolve_protocol(cfg)


def _branches(cfg: RunConfig, pc: ProtocolConfig, table: CorrectionTable, secret: SecretState):
    if cfg.decoder == "table":
        return enumerate_protocol_branches(pc, secret, "table", table)
    return enumerate_protocol_branches(pc, secret, cfg.decoder)


HANDLERS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "synthesize": cmd_synthesize,
    "audit": cmd_audit,
    "verify": cmd_verify,
    "security": cmd_security,
    "sweep": cmd_sweep,
}


# -- fixtures -----------------------------------------------------------------


def compare_artifacts(expected, actual, path: str = "$", tol: float = FIXTURE_TOL) -> list[str]:
    """Differences between two JSON values; floats compare within ``tol``."""
    if isinstance(expected, dict) and isinstance(actual, dict):
        diffs = []
        for k in sorted(set(expected) | set(actual)):
            if k not in actual:
                diffs.append(f"{path}.{k}: missing")
            elif k not in expected:
                diffs.append(f"{path}.{k}: unexpected")
            else:
                diffs += compare_artifacts(expected[k], actual[k], f"{path}.{k}", tol)
        return diffs
    if isinstance(expected, list) and isinstance(actual, list):
        if len(expected) != len(actual):
            return [f"{path}: length {len(expected)} != {len(actual)}"]
        return [d for i, (e, a) in enumerate(zip(expected, actual)) for d in compare_artifacts(e, a, f"{path}[{i}]", tol)]
    numeric = (int, float)
    if isinstance(expected, numeric) and isinstance(actual, numeric) and not isinstance(expected, bool):
        return [] if abs(expected - actual) <= tol else [f"{path}: {expected!r} != {actual!r}"]
    return [] if expected == actual else [f"{path}: {expected!r} != {actual!r}"]


# which default runs have a pinned fixture: file name -> argv
FIXTURE_RUNS = {
    "sweep_n5.json": ["sweep", "--n", "5"],
    "sweep_n6.json": ["sweep", "--n", "6"],
    "table_n5.json": ["synthesize", "--n", "5"],
    "table_n6.json": ["synthesize", "--n", "6"],
    "audit_eq6.json": ["audit", "--n", "5", "--decoder", "eq6"],
    "audit_eq8.json": ["audit", "--n", "6", "--decoder", "eq8"],
    "security_n5.json": ["security", "--n", "5", "--pairs", "50", "--seed", "0"],
    "security_n6.json": ["security", "--n", "6", "--pairs", "50", "--seed", "0"],
}
CONFORMANCE = "conformance.json"


def fixture_for(cfg: RunConfig) -> str | None:
    """The fixture file pinning this exact run, if any."""
    probe = {k: v for k, v in cfg.to_json().items() if k not in ("out", "fixtures", "regen_fixtures")}
    for name, argv in FIXTURE_RUNS.items():
        pinned = {k: v for k, v in parse_config(argv).to_json().items() if k not in ("out", "fixtures", "regen_fixtures")}
        if pinned == probe:
            return name
    return None


def _fixture_payload(report: dict) -> dict:
    # the echoed RunConfig carries output paths that should not be pinned
    return {k: v for k, v in report.items() if k != "run_config"}


def conformance_states() -> dict:
    """Post-measurement states at fixed inputs, for cross-implementation checks."""
    out = {}
    s00 = SecretState.basis("00")
    for name, variant in (("n5_lock_0000_target_h", LockingVariant()), ("n5_lock_0000_bell", LockingVariant("bell"))):
        pc = ProtocolConfig(5, ChannelSource.REFERENCE, variant)
        branches = dict(lock(prepare_joint_state(s00, pc.channel()), variant))
        br = branches["0000"]
        out[name] = {"protocol": pc.to_json(), "probability": br.probability,
                     "post_state": None if br.post_state is None else state_to_json(br.post_state)}
    pc6 = ProtocolConfig(6, ChannelSource.CIRCUIT, LockingVariant("bell"), "standard")
    a = dict(lock(prepare_joint_state(s00, pc6.channel()), pc6.variant))["0000"]
    b = dict(unlock_bob1(a.post_state, 6, pc6.variant))["00"]
    out["n6_unlock_0000_00"] = {"protocol": pc6.to_json(), "probability": a.probability * b.probability,
                                "post_state": None if b.post_state is None else state_to_json(b.post_state)}
    for n in (5, 6):
        pc = resolve_protocol(parse_config(["run", "--n", str(n)]))[0]
        out[f"n{n}_outcomes_secret_00"] = outcome_distribution(pc, s00)
    out["parties"] = {str(n): {p: list(assign_parties(n).wires_of(p)) for p in assign_parties(n).party_names()}
                      for n in range(5, 11)}
    return out


def regenerate_fixtures(directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, argv in FIXTURE_RUNS.items():
        cfg = parse_config(argv)
        report, _ = HANDLERS[cfg.command](cfg)
        path = directory / name
        emit_report(with_version(report), path)
        written.append(path)
    path = directory / CONFORMANCE
    emit_report(with_version(conformance_states()), path)
    written.append(path)
    return written


def check_fixture(cfg: RunConfig, report: dict) -> list[str]:
    name = fixture_for(cfg)
    if name is None:
        return []
    directory = Path(cfg.fixtures) if cfg.fixtures else FIXTURE_DIR
    path = directory / name
    if not path.exists():
        return [f"{path}: pinned fixture missing (run with --regen-fixtures)"]
    pinned = read_artifact(path)
    # round-trip through the writer so both sides carry identical float text
    fresh = json.loads(dumps(with_version(_fixture_payload(report))))
    return compare_artifacts(pinned, fresh)


# -- entry point ----------------------------------------------------------------


def execute(cfg: RunConfig) -> int:
    if cfg.regen_fixtures:
        directory = Path(cfg.fixtures) if cfg.fixtures else FIXTURE_DIR
        try:
            for path in regenerate_fixtures(directory):
                print(f"wrote {path}", file=sys.stderr)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_OK
    try:
        report, ok = HANDLERS[cfg.command](cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    diffs = check_fixture(cfg, report)
    report = with_version({**report, "run_config": cfg.to_json()})
    if diffs:
        report["fixture_diffs"] = diffs
        print(f"fixture mismatch ({len(diffs)} differences):", file=sys.stderr)
        for d in diffs[:20]:
            print(f"  {d}", file=sys.stderr)
    try:
        if cfg.out:
            emit_report(report, cfg.out)
        else:
            sys.stdout.write(dumps(report))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if ok and not diffs else EXIT_CHECK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
