"""Command-line front end: ``qedcc <command> ...``.

Exit codes: 0 success, 1 numerical failure (divergence, breakdown),
2 input error (bad file, unknown flag or key, invariant violation). Every
failure writes one JSON line ``{"error": ..., "message": ..., "exit_code": ...}``
to standard error.
"""

from __future__ import annotations

import argparse
import json
import sys

from qedcc import __version__, cc, fock, mrcc, oracle_h2, photon
from qedcc.errors import ModelFormatError, NumericalError, QedccError
from qedcc.jsonio import load_model, load_model_space, read_json
from qedcc.model import replicate, validate
from qedcc.qed import assemble_channels, parse_channels
from qedcc.report import FORMATS, Report, energy_columns, report_emit

EXIT_OK, EXIT_NUMERICAL, EXIT_INPUT = 0, 1, 2
DEFAULT_DCI_CAP = 2000

_RUN_CONFIG_KEYS = {"method", "channels", "max_iterations", "damping", "tolerance",
                    "energy_tolerance", "level_shift", "pair_mode", "pair_denominator"}


class InputError(Exception):
    """Command-line usage error; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _int_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("replica counts must be positive")
    return vals


def _float_list(text, n=3):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers") from None
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers")
    return vals


def _units(text):
    units = [u.strip().lower() for u in text.split(",") if u.strip()]
    for u in units:
        if u not in ("mhz", "cm-1"):
            raise argparse.ArgumentTypeError(f"unknown unit {u!r} (use mhz, cm-1)")
    return units


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qedcc", description="Relativistic coupled cluster with QED channels.")
    p.add_argument("--version", action="version", version=f"qedcc {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--format", choices=FORMATS, default="table")
        sp.add_argument("--output", "-o", help="write the report here instead of stdout")

    r = sub.add_parser("run", help="solve a model system")
    r.add_argument("model")
    r.add_argument("--config", help="JSON file with solver options")
    r.add_argument("--method", choices=("ccd", "ccsd", "mp2", "dci"))
    r.add_argument("--channels", help="comma-separated: coulomb,breit,hyperfine,lamb")
    r.add_argument("--pair-mode", choices=cc.PAIR_MODES)
    r.add_argument("--pair-denominator", choices=("exact", "limit"))
    r.add_argument("--max-iterations", type=int)
    r.add_argument("--damping", type=float)
    r.add_argument("--tolerance", type=float)
    r.add_argument("--energy-tolerance", type=float)
    r.add_argument("--level-shift", type=float)
    r.add_argument("--convert", type=_units, default=[], help="extra columns: mhz,cm-1")
    common(r)

    o = sub.add_parser("oracle-h2", help="closed-form H2 unit energies")
    o.add_argument("fixture")
    o.add_argument("--units", type=_int_list, default=[1, 2], help="replica counts for DCI")
    o.add_argument("--convert", type=_units, default=[])
    common(o)

    e = sub.add_parser("extensivity", help="per-unit CCD and DCI energies for replicas")
    e.add_argument("fixture")
    e.add_argument("--units", type=_int_list, default=[1, 2, 4, 8])
    e.add_argument("--dci-cap", type=int, default=DEFAULT_DCI_CAP,
                   help="largest doubles space diagonalised by brute force")
    e.add_argument("--tolerance", type=float, default=1e-13)
    e.add_argument("--energy-tolerance", type=float, default=1e-15)
    common(e)

    ph = sub.add_parser("photon", help="thermal photon averages and radiative coupling")
    ph.add_argument("input")
    ph.add_argument("--position", type=_float_list, default=[0.0, 0.0, 0.0])
    ph.add_argument("--time", type=float, default=0.0)
    ph.add_argument("--n-max", type=int, default=photon.DEFAULT_N_MAX)
    ph.add_argument("--gap", type=float, help="E2 - E1 for the static-correlation shift")
    common(ph)

    m = sub.add_parser("mrcc", help="state-specific multireference CC on a tiny space")
    m.add_argument("model")
    m.add_argument("space")
    m.add_argument("--channels")
    m.add_argument("--max-iterations", type=int, default=500)
    m.add_argument("--damping", type=float, default=0.5)
    m.add_argument("--compare-fci", action="store_true")
    common(m)

    v = sub.add_parser("validate", help="check model invariants")
    v.add_argument("model")
    common(v)
    return p


def _checked_model(path):
    system = load_model(path)
    rep = validate(system)
    if not rep.ok:
        first = rep.violations[0]
        raise ModelFormatError(
            f"{len(rep)} invariant violation(s); first: {first.invariant}: {first.detail}"
        )
    return system


def _run_config(args):
    cfg = {}
    if args.config:
        cfg = read_json(args.config)
        cfg.pop("schema_version", None)
        extra = set(cfg) - _RUN_CONFIG_KEYS
        if extra:
            raise ModelFormatError(f"config: unknown keys {sorted(extra)}")
    for key in _RUN_CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _energy_rows(table, rows, conv):
    for name, value in rows:
        table.add(name, value, *[value * f for _, f in conv])


def cmd_run(args) -> Report:
    cfg = _run_config(args)
    system = _checked_model(args.model)
    channels = parse_channels(cfg.get("channels", "coulomb"))
    method = cfg.get("method", "ccsd")
    conv = energy_columns(args.convert)
    rep = Report("run")
    t = rep.table(f"correlation report ({method})",
                  ["quantity", "hartree"] + [c for c, _ in conv])
    if method in ("ccd", "ccsd"):
        opts = cc.CCOptions(**{k: cfg[k] for k in (
            "max_iterations", "damping", "tolerance", "energy_tolerance", "level_shift",
            "pair_mode", "pair_denominator") if k in cfg})
        solve = cc.ccd_solve if method == "ccd" else cc.ccsd_solve
        amps, res = solve(system, channels, opts)
        d = res.as_dict()
        _energy_rows(t, [(k, d[k]) for k in ("e_reference", "e_breit0", "e_lamb0", "e_hf0",
                                              "e_correl", "e_1pair", "e_2pair", "e_total")], conv)
        s = rep.table("solver", ["item", "value"])
        s.add("channels", ",".join(sorted(channels)))
        s.add("converged", res.converged)
        s.add("iterations", amps.iterations)
        s.add("residual_norm", amps.residual_norm)
        s.add("amplitudes", len(amps))
    else:
        ham = assemble_channels(system, channels)
        ref = system.reference_bits
        e_ref = fock.matrix_element(ref, ref, ham).real
        e_cor = cc.mp2_energy(system, channels) if method == "mp2" else cc.dci_energy(system, channels)
        _energy_rows(t, [("e_reference", e_ref), ("e_correl", e_cor),
                         ("e_total", e_ref + e_cor)], conv)
    return rep


def cmd_oracle(args) -> Report:
    p = oracle_h2.H2UnitParams.load(args.fixture)
    conv = energy_columns(args.convert)
    rep = Report("oracle-h2")
    t = rep.table("H2 unit closed forms (per unit)", ["quantity", "hartree"] + [c for c, _ in conv])
    rows = [
        ("delta_dc", oracle_h2.delta_dc(p)),
        ("delta_dcb", oracle_h2.delta_dcb(p)),
        ("e_correl_dc", oracle_h2.correl_dc(p)[0]),
        ("e_correl_dcb", oracle_h2.correl_dcb(p)[0]),
    ]
    if oracle_h2.delta_dc(p) > 0:
        rows.append(("breit_shift_leading", oracle_h2.breit_correction_leading(p)))
    rows += [(f"dci_per_unit(n={n})", oracle_h2.dci_per_unit(p, n)) for n in args.units]
    rows.append(("mp2_per_unit", oracle_h2.mp2_per_unit(p)))
    _energy_rows(t, rows, conv)
    return rep


def cmd_extensivity(args) -> Report:
    p = oracle_h2.H2UnitParams.load(args.fixture)
    unit = oracle_h2.build_unit(p)
    rep = Report("extensivity")
    t = rep.table("per-unit correlation energy (hartree)",
                  ["units", "ccd", "dci", "dci_source", "dci_closed_form", "mp2"])
    opts = cc.CCOptions(tolerance=args.tolerance, energy_tolerance=args.energy_tolerance)
    for n in args.units:
        system = replicate(unit, n)
        _, res = cc.ccd_solve(system, options=opts)
        closed = oracle_h2.dci_per_unit(p, n)
        try:
            dci = cc.dci_energy(system, cap=args.dci_cap) / n
            source = "brute-force"
        except QedccError as exc:
            if exc.kind != "capacity":
                raise
            dci, source = closed, "closed-form"
        t.add(n, res.e_correl / n, dci, source, closed, cc.mp2_energy(system) / n)
    return rep


def cmd_photon(args) -> Report:
    state, currents = photon.load_photon_input(args.input)
    rep = Report("photon")
    t = rep.table("modes", ["mode", "k_norm", "omega_over_tau", "mean_occupation", "g0",
                            "s_plus", "n_series"])
    for i, m in enumerate(state.modes):
        x = state.ratio(m)
        s_plus, _, n_used = photon.ladder_sums(x, args.n_max)
        t.add(i, m.k_norm, x, photon.mean_occupation(m, state), photon.planck_g(0, m, state),
              s_plus, n_used)
    s = rep.table("thermal averages", ["quantity", "value"])
    s.add("tau", state.tau)
    s.add("volume", state.volume)
    s.add("energy_density", photon.radiation_energy_density(state))
    a = photon.vector_potential_average(state, args.position, args.time, args.n_max)
    for lab, comp in zip("xyz", a):
        s.add(f"A_{lab}", complex(comp))
    if currents is not None:
        summ = photon.coupling_summary(currents, state, args.n_max)
        s.add("coupling", summ.value)
        s.add("coupling_magnitude", summ.magnitude)
        s.add("order_estimate_alpha_z", summ.order_estimate)
        if args.gap is not None:
            pert, exact, (c1, c2) = mrcc.static_correlation_shift(0.0, args.gap, summ.value)
            s.add("static_shift_perturbative", pert)
            s.add("static_shift_exact", exact)
            s.add("c1", c1)
            s.add("c2", c2)
    return rep


def cmd_mrcc(args) -> Report:
    system = _checked_model(args.model)
    space = load_model_space(args.space)
    opts = mrcc.MRCCOptions(channels=tuple(parse_channels(args.channels or "coulomb")),
                            max_iterations=args.max_iterations, damping=args.damping)
    h, pairs = mrcc.mrcc_residual_solve(space, system, opts)
    rep = Report("mrcc")
    t = rep.table("effective Hamiltonian eigenpairs",
                  ["root", "energy_real", "energy_imag"]
                  + [f"|c_{k}|" for k in range(space.dimension)])
    for k, (e, c) in enumerate(pairs):
        t.add(k, e.real, e.imag, *[float(abs(x)) for x in c])
    s = rep.table("solver", ["item", "value"])
    s.add("target_root", space.target_root)
    s.add("iterations", h.iterations)
    s.add("residual_norm", h.residual_history[-1])
    s.add("warnings", "; ".join(h.warnings) or "none")
    if args.compare_fci:
        full = fock.enumerate_space(system, "full", reference=space.references[0])
        w, _ = fock.diagonalize(full, system, opts.channels)
        s.add("fci_lowest", float(w[0]))
    return rep


def cmd_validate(args) -> Report:
    system = load_model(args.model)
    result = validate(system)
    rep = Report("validate")
    t = rep.table("invariant violations", ["invariant", "detail", "magnitude"])
    for v in result.violations:
        t.add(v.invariant, v.detail, v.magnitude)
    rep.failures = len(result)
    return rep


COMMANDS = {
    "run": cmd_run,
    "oracle-h2": cmd_oracle,
    "extensivity": cmd_extensivity,
    "photon": cmd_photon,
    "mrcc": cmd_mrcc,
    "validate": cmd_validate,
}


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message), "exit_code": code}) + "\n")
    return code


def _write(rep, args):
    text = report_emit(rep, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except InputError as exc:
        return _fail("usage", exc, EXIT_INPUT)
    try:
        rep = COMMANDS[args.command](args)
        _write(rep, args)
    except NumericalError as exc:
        return _fail(exc.kind, exc, EXIT_NUMERICAL)
    except QedccError as exc:
        return _fail(exc.kind, exc, EXIT_INPUT)
    except (OSError, ValueError) as exc:
        return _fail("input", exc, EXIT_INPUT)
    if rep.failures:
        return _fail("validation", f"{rep.failures} invariant violation(s)", EXIT_INPUT)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
