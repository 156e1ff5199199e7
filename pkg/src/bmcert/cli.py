"""``bmcert`` command-line entry point.

Each invocation prints exactly one JSON run record on stdout. Exit codes:
0 on success, 2 on invalid input (bad flags, missing or malformed files),
1 on numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import certificate, harness, instances, kuramoto, landscape
from ._parallel import default_jobs
from .errors import NumericalError, ValidationError
from .manifold import align_columns, load_configuration, random_configuration, save_configuration
from .solver import SolverOptions, solve

MODEL_CHOICES = {
    "gaussian": instances.Model.GAUSSIAN_Z2,
    "bernoulli": instances.Model.BERNOULLI_Z2,
    "kuramoto": instances.Model.KURAMOTO,
}


class UsageError(ValidationError):
    pass


def _load_sign_vector(path):
    if path is None:
        return None
    return np.loadtxt(path, ndmin=1)


def _load_instance(args):
    return instances.load_instance(args.instance, _load_sign_vector(args.x))


def cmd_generate(args, record) -> None:
    model = MODEL_CHOICES[args.model]
    param = {"gaussian": args.sigma, "bernoulli": args.delta, "kuramoto": args.alpha}[args.model]
    if param is None:
        raise UsageError(f"--{harness.PARAM_NAME[model]} is required for model {args.model}")
    inst = harness.make_instance(model, args.n, param, args.seed)
    sidecar = instances.save_instance(args.out, inst)
    record.outputs += [args.out, sidecar]


def _solver_options(args) -> SolverOptions:
    return SolverOptions(
        max_iters=args.max_iters, grad_tol=args.grad_tol, hess_tol=args.hess_tol, seed=args.seed
    )


def cmd_solve(args, record) -> None:
    inst = _load_instance(args)
    lap = inst.laplacian()
    if args.init is not None:
        V0 = load_configuration(args.init)
    else:
        V0 = random_configuration(inst.n, args.p, args.seed)
    result = solve(lap, V0, _solver_options(args))
    payload = result.to_dict()
    payload["theorem1_verdict"] = landscape.theorem1_verdict(lap, V0.shape[1]).value
    payload["cond"] = lap.cond
    harness.dump_json(args.out, payload)
    record.outputs.append(args.out)
    if args.save_config is not None:
        save_configuration(args.save_config, result.V_final)
        record.outputs.append(args.save_config)


def certify_audit(lap, V) -> dict:
    """Align ``V``, build both certificates, verify, and bound the condition number."""
    V_aligned, _ = align_columns(V)
    cert = certificate.build_certificate(V_aligned)
    verification = certificate.verify_certificate(cert, V_aligned)
    ling = certificate.build_ling_certificate(V_aligned)
    bound = certificate.certified_cond_lower_bound(lap, cert, V_aligned)
    chain = certificate.bound_chain(lap, cert)
    return {
        "certificate": certificate.audit_dict(cert, verification),
        "ling": {"trace_M": ling.trace_M, "inner_Z_Pperp": ling.inner_Z_Pperp, "ratio": ling.ratio},
        "chain": chain.to_dict(),
        "certified_lower_bound": bound,
        "cond": lap.cond,
        "all_checks_pass": verification.all_passed,
    }


def cmd_certify(args, record) -> None:
    inst = _load_instance(args)
    V = load_configuration(args.config)
    audit = certify_audit(inst.laplacian(), V)
    harness.dump_json(args.out, audit)
    record.outputs.append(args.out)
    if not audit["all_checks_pass"]:
        failed = [k for k, c in audit["certificate"]["checks"].items() if not c["pass"]]
        raise certificate.ChainViolation(f"certificate checks failed: {', '.join(failed)}")


def cmd_adversarial(args, record) -> None:
    adv = instances.adversarial(args.n, args.p)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrix = out / "instance.txt"
    config = out / "v_trap.txt"
    audit_path = out / "audit.json"
    sidecar = instances.save_instance(matrix, adv.instance)
    save_configuration(config, adv.V_trap)
    lap = adv.instance.laplacian()
    audit = certify_audit(lap, adv.V_trap)
    audit["criticality"] = landscape.classify_point(lap, adv.V_trap).to_dict()
    audit["constraints"] = instances.adversarial_residuals(adv.V_trap)
    harness.dump_json(audit_path, audit)
    record.outputs += [matrix, sidecar, config, audit_path]


def cmd_kuramoto(args, record) -> None:
    opts = kuramoto.FlowOptions(dt=args.dt, t_max=args.tmax, sample_every=args.sample_every)
    outcomes = []
    for k in range(args.trials):
        seed = (args.seed, 0, k)
        C = instances.kuramoto_coupling(args.n, args.alpha, seed + (0,)).C
        V0 = random_configuration(args.n, args.p, seed + (1,))
        traj = kuramoto.flow(C, V0, opts)
        path = Path(args.out) if args.trials == 1 else _indexed(Path(args.out), k)
        traj.write_csv(path)
        record.outputs.append(path)
        outcomes.append(bool(traj.synchronized))
    record.config["success_rate"] = sum(outcomes) / len(outcomes)
    record.config["synchronized"] = outcomes


def _indexed(path: Path, k: int) -> Path:
    return path.with_name(f"{path.stem}_{k}{path.suffix}")


def _parse_grid(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:num`` (inclusive, evenly spaced)."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return np.linspace(float(start), float(stop), int(num)).tolist()
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}") from exc


def cmd_phase(args, record) -> None:
    result = harness.run_phase(
        MODEL_CHOICES[args.model], args.n, args.p, _parse_grid(args.grid), args.trials,
        args.criterion, args.seed, args.epsilon, args.jobs,
    )
    out = Path(args.out)
    result.write_csv(out)
    side = out.with_suffix(".json")
    harness.dump_json(side, result.to_dict())
    record.outputs += [out, side]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bmcert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a random cost matrix")
    g.add_argument("--model", choices=sorted(MODEL_CHOICES), required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--sigma", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run the Riemannian solver on an instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--x", help="file with the ground-truth sign vector")
    s.add_argument("--p", type=int, default=2)
    s.add_argument("--init", help="initial configuration file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iters", type=int, default=20000)
    s.add_argument("--grad-tol", type=float)
    s.add_argument("--hess-tol", type=float)
    s.add_argument("--out", required=True)
    s.add_argument("--save-config")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("certify", help="audit the dual certificate at a configuration")
    c.add_argument("--instance", required=True)
    c.add_argument("--x")
    c.add_argument("--config", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_certify)

    a = sub.add_parser("adversarial", help="build the tight instance and audit its trap")
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--p", type=int, required=True)
    a.add_argument("--out-dir", required=True)
    a.set_defaults(func=cmd_adversarial)

    k = sub.add_parser("kuramoto", help="integrate the Kuramoto flow")
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--alpha", type=float, required=True)
    k.add_argument("--p", type=int, default=2)
    k.add_argument("--dt", type=float)
    k.add_argument("--tmax", type=float, default=1e3)
    k.add_argument("--trials", type=int, default=1)
    k.add_argument("--sample-every", type=int, default=1)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_kuramoto)

    ph = sub.add_parser("phase", help="Monte Carlo success rates over a parameter grid")
    ph.add_argument("--model", choices=sorted(MODEL_CHOICES), required=True)
    ph.add_argument("--n", type=int, required=True)
    ph.add_argument("--p", type=int, default=2)
    ph.add_argument("--grid", required=True, help="a,b,c or start:stop:num")
    ph.add_argument("--trials", type=int, default=20)
    ph.add_argument("--criterion", choices=[c.value for c in harness.Criterion], default="BenignCertified")
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--epsilon", type=float, default=0.01)
    ph.add_argument("--jobs", type=int, default=default_jobs())
    ph.add_argument("--out", required=True)
    ph.set_defaults(func=cmd_phase)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            raise
        # argparse already printed usage; still emit the run record
        record = harness.RunRecord(command="", config={"argv": list(sys.argv[1:] if argv is None else argv)})
        record.exit_code, record.error = 2, "usage error"
        print(record.to_json())
        return 2
    config = {k: v for k, v in vars(args).items() if k != "func"}
    record = harness.RunRecord(command=args.command, config=config)
    clock = harness.Stopwatch()
    code = 0
    try:
        args.func(args, record)
    except (ValidationError, OSError) as exc:
        code, record.error = 2, f"{type(exc).__name__}: {exc}"
    except (NumericalError, ArithmeticError) as exc:
        code, record.error = 1, f"{type(exc).__name__}: {exc}"
    except ValueError as exc:
        code, record.error = 2, f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # unexpected failure still gets a run record
        code, record.error = 1, f"{type(exc).__name__}: {exc}"
    record.exit_code = code
    record.wall_time = clock.elapsed()
    if record.error:
        print(f"bmcert {args.command}: {record.error}", file=sys.stderr)
    print(record.to_json())
    return code


if __name__ == "__main__":
    sys.exit(main())
