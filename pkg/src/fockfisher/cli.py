"""Command line front end: single-point reports, sweep tables, invariant checks.

Tables are CSV with a fixed column order and 12 significant digits so that
identical configurations produce byte-identical files; the JSON manifest
echoes the full configuration and carries per-row diagnostics, with all
volatile values (completion time, wall clock) confined to its timestamp
field.  Thread count is capped by the FOCKFISHER_THREADS environment
variable; unset means automatic.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .channels import apply_loss, apply_phase_diffusion, diffusion_integral_oracle, parameter_derivatives
from .fisher import classical_fisher, compute_fisher_pair
from .fock import balanced_bs_unitary, ghb_state, hb_state, kravchuk_matrix, noon_state
from .homodyne import default_halfwidth, joint_pdf, make_grid
from .metrics import (
    ScenarioConfig,
    SweepRow,
    evaluate_scenario,
    sweep_delta,
    sweep_family,
    sweep_photon_number,
    tradeoff_upsilon,
)

CSV_COLUMNS = (
    "label,N,n,delta_part,Delta,eta_a,eta_b,Upsilon,Sigma2,"
    "FC_pp,FC_dd,FQ_pp,FQ_dd,HCR,flags"
)
HEADER_NOTE = "# parameter order (phi, Delta); phi in radians, Delta dimensionless"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _row_csv(row: SweepRow, with_cutoff: bool) -> str:
    fields = [
        row.label,
        str(row.total_photons),
        "" if row.input_n < 0 else str(row.input_n),
        "" if row.delta_partition == -999 else str(row.delta_partition),
        _fmt(row.delta),
        _fmt(row.eta_a),
        _fmt(row.eta_b),
        _fmt(row.upsilon),
        _fmt(row.sigma2),
        _fmt(row.fc_phi),
        _fmt(row.fc_delta),
        _fmt(row.fq_phi),
        _fmt(row.fq_delta),
        _fmt(row.hcr),
        row.flags,
    ]
    if with_cutoff:
        fields.append(_fmt(row.delta_cutoff))
    return ",".join(fields)


def _write_table(path: Path, rows, with_cutoff: bool = False) -> None:
    header = CSV_COLUMNS + (",Delta_cutoff" if with_cutoff else "")
    lines = [HEADER_NOTE, header]
    lines.extend(_row_csv(r, with_cutoff) for r in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _rows_json(rows, with_cutoff: bool = False):
    out = []
    for r in rows:
        d = asdict(r)
        if not with_cutoff:
            d.pop("delta_cutoff", None)
        out.append(d)
    return out


def _parse_float_list(text: str):
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_int_list(text: str):
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _parse_delta_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"delta range must be lo:hi:steps, got {text!r}"
        )
    return (float(parts[0]), float(parts[1]), int(parts[2]))


def load_config_file(path: str) -> dict:
    """Flat key-value configuration: one `key value` pair per line."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, val = line.partition("=")
        else:
            key, _, val = line.partition(" ")
        key = key.strip().replace("-", "_")
        val = val.strip()
        if not key or not val:
            raise ValueError(f"{path}:{lineno}: malformed config line {raw!r}")
        values[key] = val
    return values


_CONFIG_PARSERS = {
    "state": str,
    "phi": float,
    "delta": float,
    "eta_a": float,
    "eta_b": float,
    "grid_points": int,
    "grid_halfwidth": float,
    "axis": str,
    "families": lambda s: tuple(tok.strip() for tok in s.split(",") if tok.strip()),
    "photon_numbers": _parse_int_list,
    "partitions": _parse_int_list,
    "etas": _parse_float_list,
    "delta_range": _parse_delta_range,
    "delta_anchors": _parse_float_list,
    "max_photons": int,
}


def build_config(args) -> ScenarioConfig:
    values = {}
    if getattr(args, "config", None):
        raw = load_config_file(args.config)
        for key, val in raw.items():
            if key not in _CONFIG_PARSERS:
                raise ValueError(f"unknown config key {key!r} in {args.config}")
            values[key] = _CONFIG_PARSERS[key](val)
    overrides = {
        "state": args.state,
        "phi": args.phi,
        "grid_points": args.grid_points,
        "grid_halfwidth": args.grid_halfwidth,
    }
    if getattr(args, "delta", None) is not None:
        overrides["delta"] = args.delta
    if getattr(args, "delta_range", None) is not None:
        overrides["delta_range"] = args.delta_range
    if getattr(args, "eta", None) is not None:
        etas = _parse_float_list(args.eta)
        overrides["etas"] = etas
        overrides["eta_a"] = etas[0]
        overrides["eta_b"] = etas[0]
    if getattr(args, "eta_a", None) is not None:
        overrides["eta_a"] = args.eta_a
    if getattr(args, "eta_b", None) is not None:
        overrides["eta_b"] = args.eta_b
    for key in ("axis", "families", "photon_numbers", "partitions", "max_photons"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig(**values)


def _matrix_lines(name: str, m) -> list:
    return [
        f"{name} = [[{_fmt(float(m[0, 0]))}, {_fmt(float(m[0, 1]))}],",
        f"{'':>{len(name)}}    [{_fmt(float(m[1, 0]))}, {_fmt(float(m[1, 1]))}]]",
    ]


def cmd_single(args) -> int:
    config = build_config(args)
    result = evaluate_scenario(config)
    pair = result.pair
    half = config.grid_halfwidth or default_halfwidth(result.total_photons)
    if args.format == "json":
        payload = {
            "scenario": {
                "state": result.label, "phi": result.phi, "delta": result.delta,
                "eta_a": result.eta_a, "eta_b": result.eta_b,
                "grid_halfwidth": half, "grid_points": config.grid_points,
            },
            "parameter_order": ["phi", "Delta"],
            "f_c": pair.f_c.tolist(),
            "f_q": pair.f_q.tolist(),
            "w_phi_delta": [pair.w[0, 1].real, pair.w[0, 1].imag],
            "sld_commutator_norm": pair.sld_commutator_norm,
            "upsilon": result.upsilon,
            "sigma2": result.sigma2,
            "hcr": result.hcr,
            "pdf_norm_error": pair.pdf_norm_error,
            "flags": list(result.flags),
        }
        print(json.dumps(payload, indent=2, sort_keys=True, default=str))
        return 0
    lines = [
        f"scenario: {result.label}  phi={_fmt(result.phi)}  Delta={_fmt(result.delta)}  "
        f"eta_a={_fmt(result.eta_a)}  eta_b={_fmt(result.eta_b)}",
        f"grid: halfwidth={_fmt(half)} points={config.grid_points}",
        "parameter order (phi, Delta); phi in radians, Delta dimensionless",
        "",
    ]
    lines += _matrix_lines("F_C", pair.f_c)
    lines += _matrix_lines("F_Q", pair.f_q)
    w01 = pair.w[0, 1]
    lines.append(f"W[phi,Delta] = {_fmt(w01.real)} + {_fmt(w01.imag)}i")
    lines.append(f"|[L_phi, L_Delta]|_F = {_fmt(pair.sld_commutator_norm)}")
    lines.append("")
    lines.append(f"Upsilon = {_fmt(result.upsilon) or 'undefined'}")
    lines.append(f"Sigma^2 = {_fmt(result.sigma2) or 'undefined'}")
    lines.append(f"HCR     = {_fmt(result.hcr) or 'undefined'}")
    if result.flags:
        lines.append("flags: " + "; ".join(result.flags))
    print("\n".join(lines))
    return 0


def _panel_files(axis: str, config: ScenarioConfig, rows):
    """Split rows into figure-panel-equivalent tables, deterministic order."""
    panels = []
    if axis in ("delta", "photons"):
        for eta in config.etas:
            subset = [r for r in rows if r.eta_a == eta]
            panels.append((f"sweep_{axis}_eta{eta:.2f}.csv", subset, False))
    else:
        for eta in config.etas:
            for total in config.photon_numbers:
                subset = [
                    r for r in rows if r.eta_a == eta and r.total_photons == total
                ]
                panels.append((f"sweep_family_eta{eta:.2f}_N{total}.csv", subset, True))
    return panels


def cmd_sweep(args) -> int:
    config = build_config(args)
    axis = config.axis
    if axis not in ("delta", "photons", "family"):
        print(f"error: sweep axis must be delta, photons or family, got {axis!r}",
              file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    driver = {"delta": sweep_delta, "photons": sweep_photon_number,
              "family": sweep_family}[axis]
    rows = driver(config)
    wall = time.monotonic() - started

    written = []
    for name, subset, with_cutoff in _panel_files(axis, config, rows):
        path = out_dir / name
        if args.format == "json":
            path = path.with_suffix(".json")
            path.write_text(
                json.dumps(_rows_json(subset, with_cutoff), indent=1, sort_keys=True,
                           default=str) + "\n",
                encoding="utf-8",
            )
        else:
            _write_table(path, subset, with_cutoff)
        written.append(path.name)

    flagged = [
        {"label": r.label, "Delta": r.delta, "eta_a": r.eta_a, "flags": r.flags}
        for r in rows if r.flags
    ]
    skipped = [
        {"label": r.label, "Delta": r.delta, "eta_a": r.eta_a}
        for r in rows if r.upsilon is None
    ]
    manifest = {
        "engine": {"name": "fockfisher", "version": __version__},
        "config": asdict(config),
        "grid": {
            "points_per_axis": config.grid_points,
            "halfwidth": config.grid_halfwidth or "auto",
        },
        "parameter_order": ["phi", "Delta"],
        "axis": axis,
        "files": written,
        "row_count": len(rows),
        "diagnostics": {"flagged_rows": flagged, "skipped_rows": skipped},
        "timestamp": {
            "completed_utc": datetime.now(timezone.utc).isoformat(),
            "wall_clock_seconds": wall,
        },
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {len(written)} tables and manifest.json to {out_dir}")
    return 0


def _validation_checks(grid_halfwidth=None, grid_points=401):
    """Fast invariant suite; each check returns (ok, detail)."""

    def kravchuk_unitarity():
        K = kravchuk_matrix(12)
        dev = float(np.max(np.abs(K @ K.T - np.eye(13))))
        return dev < 1e-10, f"max deviation {dev:.3e}"

    def bs_unitarity():
        U = balanced_bs_unitary(8).matrix
        dev = float(np.max(np.abs(U @ U.conj().T - np.eye(9))))
        p = np.arange(9)
        phases = np.outer((-1j) ** p, 1j**p)
        rel = float(np.max(np.abs(U - phases * kravchuk_matrix(8))))
        return dev < 1e-12 and rel < 1e-10, f"unitarity {dev:.3e}, kravchuk relation {rel:.3e}"

    def channel_trace():
        rho = apply_loss(apply_phase_diffusion(ghb_state(4, 0), 0.3, 0.7), 0.6, 0.8)
        dev = abs(rho.total_trace() - 1.0)
        return dev < 1e-10, f"|trace - 1| = {dev:.3e}"

    def block_positivity():
        rho = apply_loss(apply_phase_diffusion(ghb_state(4, 0), 0.3, 0.7), 0.6, 0.8)
        worst = min(
            float(np.linalg.eigvalsh(b).min()) for b in rho.blocks.values()
        )
        return worst > -1e-10, f"min eigenvalue {worst:.3e}"

    def diffusion_closed_form():
        state = ghb_state(2, 1)
        closed = apply_phase_diffusion(state, 0.3, 0.5).blocks[(0, 0)]
        quad = diffusion_integral_oracle(state, 0.3, 0.5, 60).blocks[(0, 0)]
        dev = float(np.max(np.abs(closed - quad)))
        return dev < 1e-10, f"closed form vs quadrature {dev:.3e}"

    def _field(state, phi, delta, eta):
        rho = apply_phase_diffusion(state, phi, delta)
        if eta < 1.0:
            rho = apply_loss(rho, eta, eta)
        dphi, ddelta = parameter_derivatives(rho)
        half = grid_halfwidth or default_halfwidth(state.total_photons)
        grid = make_grid(half, grid_points)
        return joint_pdf(rho, dphi, ddelta, grid), grid

    def pdf_normalization():
        fieldv, grid = _field(ghb_state(4, 0), 0.3, 0.5, 0.8)
        dev = abs(fieldv.integral(fieldv.p) - 1.0)
        return dev < 1e-6, f"|norm - 1| = {dev:.3e}"

    def pdf_derivatives():
        state = ghb_state(2, 0)
        step = 1e-4
        fieldv, grid = _field(state, 0.3, 0.6, 1.0)
        f_plus, _ = _field(state, 0.3 + step, 0.6, 1.0)
        f_minus, _ = _field(state, 0.3 - step, 0.6, 1.0)
        fd = (f_plus.p - f_minus.p) / (2 * step)
        mask = fieldv.p > 1e-10
        rel = float(np.max(np.abs(fd - fieldv.dp_dphi)[mask] / (np.abs(fd[mask]) + 1e-9)))
        return rel < 1e-5, f"max relative FD error {rel:.3e}"

    def phi_independence():
        values = []
        for phi in (0.0, 0.4, 1.3):
            cfg = ScenarioConfig(state="ghb:0,2", phi=phi, delta=0.7,
                                 grid_points=grid_points,
                                 grid_halfwidth=grid_halfwidth)
            res = evaluate_scenario(cfg)
            values.append((res.pair.f_c[0, 0], res.pair.f_q[0, 0]))
        spread = max(
            abs(a - b) / max(abs(a), 1e-300)
            for col in zip(*values) for a in col for b in col
        )
        return spread < 1e-6, f"max relative spread {spread:.3e}"

    def information_ordering():
        ok = True
        worst = 0.0
        for eta in (1.0, 0.7):
            cfg = ScenarioConfig(state="ghb:0,3", delta=0.5, eta_a=eta, eta_b=eta,
                                 grid_points=grid_points, grid_halfwidth=grid_halfwidth)
            pair = evaluate_scenario(cfg).pair
            eig = float(np.linalg.eigvalsh(pair.f_q - pair.f_c).min())
            worst = min(worst, eig)
            ok = ok and eig > -1e-8
        return ok, f"min eigenvalue of F_Q - F_C: {worst:.3e}"

    def qubit_bound():
        worst = 0.0
        for eta in (1.0, 0.5):
            for delta in np.geomspace(0.05, 5.0, 10):
                cfg = ScenarioConfig(state="ghb:0,1", delta=float(delta),
                                     eta_a=eta, eta_b=eta,
                                     grid_points=grid_points,
                                     grid_halfwidth=grid_halfwidth)
                res = evaluate_scenario(cfg)
                worst = max(worst, res.upsilon)
        return worst <= 1.0 + 1e-6, f"max qubit Upsilon {worst:.10f}"

    def pure_state_qfi():
        worst = 0.0
        for state in (ghb_state(4, 0), noon_state(4), hb_state(4)):
            rho = apply_phase_diffusion(state, 0.3, 0.0)
            dphi, ddelta = parameter_derivatives(rho)
            pair = compute_fisher_pair(rho, dphi, ddelta, None)
            dev = abs(pair.f_q[0, 0] - 4.0 * state.mode_a_photon_variance())
            worst = max(worst, dev)
        return worst < 1e-8, f"max |F_Q - 4 Var(n_a)| = {worst:.3e}"

    return [
        ("kravchuk-unitarity", kravchuk_unitarity),
        ("beam-splitter-unitarity", bs_unitarity),
        ("channel-trace", channel_trace),
        ("block-positivity", block_positivity),
        ("diffusion-closed-form", diffusion_closed_form),
        ("pdf-normalization", pdf_normalization),
        ("pdf-derivatives", pdf_derivatives),
        ("phi-independence", phi_independence),
        ("information-ordering", information_ordering),
        ("qubit-bound", qubit_bound),
        ("pure-state-qfi", pure_state_qfi),
    ]


def cmd_validate(args) -> int:
    checks = _validation_checks(args.grid_halfwidth, args.grid_points)
    failures = 0
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as err:  # a violated precondition is a failed check
            ok, detail = False, f"{type(err).__name__}: {err}"
        status = "PASS" if ok else "FAIL"
        print(f"{status}  {name:<26} {detail}")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} of {len(checks)} checks failed")
    return 1 if failures else 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key-value config file")
    parser.add_argument("--state", default=None, help="ghb:<n>,<N-n> | hb:<N> | noon:<N>")
    parser.add_argument("--phi", type=float, default=None)
    parser.add_argument("--delta", type=float, default=None)
    parser.add_argument("--delta-range", type=_parse_delta_range, default=None,
                        metavar="LO:HI:STEPS")
    parser.add_argument("--eta", default=None,
                        help="transmission, comma separated for sweeps")
    parser.add_argument("--eta-a", type=float, default=None)
    parser.add_argument("--eta-b", type=float, default=None)
    parser.add_argument("--grid-points", type=int, default=None)
    parser.add_argument("--grid-halfwidth", type=float, default=None)
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fockfisher",
        description="Fisher information of two-mode Fock interferometry "
                    "with phase diffusion, loss and double homodyne detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_single = sub.add_parser("single", help="evaluate one parameter point")
    _add_common(p_single)

    p_sweep = sub.add_parser("sweep", help="emit sweep tables and manifest")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", choices=("delta", "photons", "family"), default=None)
    p_sweep.add_argument("--families", type=lambda s: tuple(s.split(",")), default=None)
    p_sweep.add_argument("--photons", dest="photon_numbers", type=_parse_int_list,
                         default=None)
    p_sweep.add_argument("--partitions", type=_parse_int_list, default=None)
    p_sweep.add_argument("--max-photons", dest="max_photons", type=int, default=None)
    p_sweep.add_argument("--out", default="out", help="output directory")

    p_val = sub.add_parser("validate", help="run the fast invariant suite")
    p_val.add_argument("--grid-points", type=int, default=401)
    p_val.add_argument("--grid-halfwidth", type=float, default=None)

    args = parser.parse_args(argv)
    if args.command == "single":
        return cmd_single(args)
    if args.command == "sweep":
        return cmd_sweep(args)
    return cmd_validate(args)


if __name__ == "__main__":
    sys.exit(main())
