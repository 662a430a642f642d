"""Command-line interface.

    ditsmark keygen  --lambda 16 --out key.txt [--seed N]
    ditsmark embed   --key key.txt --prompt TEXT --seed N [--model-config m.cfg] --out payload.bits
    ditsmark detect  --key key.txt --in payload.bits --out report.txt
    ditsmark verify  --in report.txt --payload payload.bits --prompt TEXT
    ditsmark attack  --in payload.bits --attack-spec a.cfg --seed N --out attacked.bits [--key key.txt]
    ditsmark analyze sweep|battery|table ...

Exit status of ``verify`` (and ``detect``): 0 clean-prefix, 2 tampered,
3 unwatermarked. Malformed inputs exit 1 with a diagnostic.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from .attacks import AttackSpec, distinguisher_battery, dumps_sweep, loads_sweep, robustness_sweep, substitution_attack
from .chain import MalformedInput, dumps_report, loads_report, udetect, uembed_chain, verify
from .core import BitFormatError, BitString, SecretKey, read_bits, text_to_bits, write_bits
from .model import MockSourceConfig, build_source, parse_model_config
from .randomness import keygen
from .singlebit import EntropyExhausted, SchemeConfig

log = logging.getLogger("ditsmark")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TAMPERED = 2
EXIT_UNWATERMARKED = 3


class CliError(Exception):
    pass


def _require_file(path: Optional[str], flag: str) -> Path:
    if path is None:
        raise CliError(f"{flag} is required")
    p = Path(path)
    if not p.is_file():
        raise CliError(f"{flag}: no such file: {path}")
    return p


def _load_key(path: Optional[str]) -> SecretKey:
    p = _require_file(path, "--key")
    try:
        return SecretKey.loads(p.read_text())
    except ValueError as exc:
        raise CliError(f"{p}: {exc}") from None


def _scheme(args, sk_lambda: int) -> SchemeConfig:
    lam = args.lambda_ if getattr(args, "lambda_", None) else sk_lambda
    eps = Fraction(getattr(args, "epsilon", "1") or "1")
    return SchemeConfig(lambda_=lam, epsilon=eps)


def _prompt_bits(args) -> BitString:
    if args.prompt is not None and args.prompt_file is not None:
        raise CliError("give either --prompt or --prompt-file, not both")
    if args.prompt is not None:
        return text_to_bits(args.prompt)
    p = _require_file(args.prompt_file, "--prompt or --prompt-file")
    if args.prompt_format == "bits":
        return read_bits(p)
    return text_to_bits(p.read_text(encoding="utf-8"))


def _model_config(args):
    if args.model_config is None:
        return MockSourceConfig(seed=args.seed)
    p = _require_file(args.model_config, "--model-config")
    try:
        spec = parse_model_config(p.read_text(), p.parent)
    except ValueError as exc:
        raise CliError(f"{p}: {exc}") from None
    if isinstance(spec, MockSourceConfig):
        return replace(spec, seed=args.seed)
    return spec


def cmd_keygen(args) -> int:
    out = Path(args.out)
    if args.seed is not None:
        entropy = hashlib.sha256(b"ditsmark-cli-seed" + str(args.seed).encode()).digest()
    else:
        entropy = os.urandom(32)
    sk = keygen(args.lambda_ or 16, entropy)
    out.write_text(sk.dumps())
    print(f"wrote {out} (lambda={sk.lambda_}, fingerprint={sk.fingerprint()})")
    return EXIT_OK


def cmd_embed(args) -> int:
    sk = _load_key(args.key)
    prompt = _prompt_bits(args)
    spec = _model_config(args)
    cfg = _scheme(args, sk.lambda_)
    source = build_source(spec, origin=len(prompt))
    try:
        chain = uembed_chain(sk, prompt, source, cfg)
    except EntropyExhausted as exc:
        raise CliError(f"embedding failed: {exc}") from None
    write_bits(args.out, chain.payload)
    print(f"wrote {len(chain.payload)} bits, {len(chain.blocks)} blocks, {chain.complete_links} complete links to {args.out}")
    return EXIT_OK


def cmd_detect(args) -> int:
    sk = _load_key(args.key)
    payload = read_bits(_require_file(args.inp, "--in"))
    cfg = _scheme(args, sk.lambda_)
    dets = udetect(sk, payload, cfg) if len(payload) else []
    text = dumps_report(dets, cfg.lambda_, sk.fingerprint(), len(payload))
    Path(args.out).write_text(text)
    print(f"{len(dets)} detections written to {args.out}")
    return EXIT_OK if dets else EXIT_UNWATERMARKED


def cmd_verify(args) -> int:
    rp = _require_file(args.inp, "--in")
    payload = read_bits(_require_file(args.payload, "--payload"))
    prompt = _prompt_bits(args)
    parsed = loads_report(rp.read_text())
    if parsed.payload_length != len(payload):
        raise CliError(f"{rp}: report covers {parsed.payload_length} bits but payload has {len(payload)}")
    lam = args.lambda_ or parsed.lambda_
    report = verify(prompt, parsed.detections, payload, lam)
    for c in report.per_link:
        print(f"link {c.index}: expected {c.expected} recovered {c.recovered} {'ok' if c.match else 'MISMATCH'}")
    for w in report.warnings:
        print(f"warning: {w}")
    print(f"coverage {report.coverage:.4f}")
    print(f"verdict {report.verdict}")
    print(f"classification {report.classification}")
    if args.out:
        Path(args.out).write_text(dumps_report(parsed.detections, lam, parsed.key_fingerprint, len(payload), report))
    return report.exit_code


def cmd_attack(args) -> int:
    payload = read_bits(_require_file(args.inp, "--in"))
    sp = _require_file(args.attack_spec, "--attack-spec")
    try:
        spec = AttackSpec.loads(sp.read_text())
    except ValueError as exc:
        raise CliError(f"{sp}: {exc}") from None
    spec = replace(spec, seed=args.seed)
    sk = _load_key(args.key) if args.key else None
    if spec.kind == "adversarial_flip" and sk is None:
        raise CliError("adversarial_flip needs --key")
    attacked = substitution_attack(payload, spec, sk)
    write_bits(args.out, attacked)
    flipped = sum(1 for a, b in zip(payload, attacked) if a != b)
    print(f"{spec.kind}: {flipped} bits changed, wrote {args.out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.mode == "table":
        rows = loads_sweep(_require_file(args.inp, "--in").read_text())
        out = ["gamma,epsilon,trials,successes,recovery,mean_gap"]
        out += [",".join(r.line().split()) for r in rows]
        text = "\n".join(out) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    sk = _load_key(args.key)
    spec = _model_config(args)
    if not isinstance(spec, MockSourceConfig):
        raise CliError("analyze needs a mock source config (fixed/band/markov)")
    cfg = _scheme(args, sk.lambda_)
    if args.mode == "sweep":
        gammas = [float(g) for g in args.gammas.split(",")]
        rows = robustness_sweep(sk, spec, cfg, gammas, args.trials, seed=args.seed, kind=args.kind, scale=args.scale)
        text = dumps_sweep(rows)
    else:
        rep = distinguisher_battery(sk, spec, cfg, args.samples, seed=args.seed, shared_key=args.shared_key)
        lines = [f"# windows {rep.windows} bits_per_arm {rep.bits_per_arm[0]}"]
        lines += [f"{name} {p!r} {'pass' if p >= rep.significance else 'FAIL'}" for name, p in rep.pvalues.items()]
        lines.append(f"overall {'pass' if rep.passed else 'FAIL'}")
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ditsmark", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def prompt_flags(p):
        p.add_argument("--prompt", help="prompt text (UTF-8)")
        p.add_argument("--prompt-file")
        p.add_argument("--prompt-format", choices=("text", "bits"), default="text")

    p = sub.add_parser("keygen")
    p.add_argument("--lambda", dest="lambda_", type=int, default=16)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="derive the key from a seed (reproducible runs)")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("embed")
    p.add_argument("--key", required=True)
    prompt_flags(p)
    p.add_argument("--model-config")
    p.add_argument("--seed", type=int, required=True, help="model randomness seed")
    p.add_argument("--lambda", dest="lambda_", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("detect")
    p.add_argument("--key", required=True)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="lambda_", type=int)
    p.add_argument("--epsilon", choices=("1", "0.25"), default="1")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("verify")
    p.add_argument("--in", dest="inp", required=True, help="chain report from detect")
    p.add_argument("--payload", required=True)
    prompt_flags(p)
    p.add_argument("--lambda", dest="lambda_", type=int)
    p.add_argument("--out", help="write the report with verification lines appended")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("attack")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--attack-spec", required=True)
    p.add_argument("--seed", type=int, required=True, help="attack randomness seed")
    p.add_argument("--key", help="needed by adversarial_flip")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("analyze")
    p.add_argument("mode", choices=("sweep", "battery", "table"))
    p.add_argument("--key")
    p.add_argument("--model-config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--lambda", dest="lambda_", type=int)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--gammas", default="0,0.5,1,2,4")
    p.add_argument("--scale", choices=("gamma_star", "absolute", "length"), default="gamma_star")
    p.add_argument("--kind", choices=("random_flip", "adversarial_flip"), default="adversarial_flip")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--shared-key", action="store_true", help="battery: reuse one key for every window")
    p.add_argument("--in", dest="inp")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "analyze" and args.mode != "table" and args.seed is None:
        print("ditsmark: error: analyze sweep/battery needs --seed", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (CliError, MalformedInput, BitFormatError, ValueError) as exc:
        print(f"ditsmark: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
