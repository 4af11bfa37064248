"""Command-line front end.

Subcommands: radial, capacity, envelope, solve, energy, check, hausdorff.
A plain-text config file (configparser format, [common] plus per-subcommand
sections, key = value with flag names) mirrors the flags 1:1; flags override
the file. All randomness flows from one seeded generator. Exit codes:
0 success, 2 validation error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .calculus import NotMSubharmonicError
from .energy import (energy_Ep, functional_F, holder_energy_check,
                     low_exponent_check, sublevel_capacity_check)
from .envelope import (EnvelopeError, GridSet, ObstacleProblem, balayage_check,
                       hausdorff_content, msh_envelope, polarity_probe,
                       relative_extremal)
from .grid import GridDomain, GridFunction, grid_to_csv, save_grid
from .radial import (MassNotConvergedError, RadialMeasure, cap_of_ball_formula,
                     class_thresholds, combine_profiles, density_samples,
                     extremal_ball_profile, measure_of_profile,
                     phi_alpha_profile, power_profile, quadratic_profile,
                     radial_hessian_density, radial_total_mass, sample_to_grid,
                     sharp_exponent, volume_factor)
from .randfuncs import (random_grid_function, random_ordered_pair,
                        random_ordered_radial_pair, random_radial_profile)
from .solver import (SolveConfig, comparison_harness, maximum_principle_check,
                     solve_grid, solve_radial, solve_variational)

EXIT_OK, EXIT_VALIDATION, EXIT_NONCONVERGED = 0, 2, 3

SUBCOMMANDS = ("radial", "capacity", "envelope", "solve", "energy", "check",
               "hausdorff")


class ValidationError(ValueError):
    pass


def emit_report(rows, path, fieldnames):
    """Deterministic CSV with a stable header row."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fieldnames)
        for row in rows:
            w.writerow([_fmt(row.get(k, "")) for k in fieldnames])


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return x


def _build_parser():
    ap = argparse.ArgumentParser(prog="mhess",
                                 description="complex m-Hessian toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--R", type=float, default=None)
        p.add_argument("--res", type=int, default=None,
                       help="points per axis (odd >= 9)")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iter", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None,
                       help="output CSV/grid path prefix")

    p = sub.add_parser("radial", help="radial profiles, thresholds, densities")
    common(p)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--cap", type=float, default=None)
    p.add_argument("--smooth-t0", type=float, default=None)
    p.add_argument("--thresholds", action="store_true", default=None)
    p.add_argument("--samples", type=int, default=None)

    p = sub.add_parser("capacity", help="capacity of concentric balls")
    common(p)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--radial-only", action="store_true", default=None)

    p = sub.add_parser("envelope", help="m-sh envelope of a ball obstacle")
    common(p)
    p.add_argument("--r", type=float, default=None,
                   help="obstacle ball radius (obstacle -1 on the ball)")

    p = sub.add_parser("solve", help="solve H_m(u) = mu")
    common(p)
    p.add_argument("--backend", type=str, default=None,
                   choices=["radial", "grid-relaxation", "variational-descent"])
    p.add_argument("--measure", type=str, default=None,
                   choices=["phi_alpha", "power", "constant", "bumps", "file"])
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--cap", type=float, default=None)
    p.add_argument("--smooth-t0", type=float, default=None)
    p.add_argument("--value", type=float, default=None,
                   help="constant density value")
    p.add_argument("--bumps", type=str, default=None,
                   help="semicolon list r=..,w=..,mass=..")
    p.add_argument("--file", type=str, default=None, help="MHESS1 grid file")

    p = sub.add_parser("energy", help="energies and the functional F")
    common(p)
    p.add_argument("--profile", type=str, default=None,
                   choices=["phi_alpha", "extremal", "quadratic", "power"])
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--cap", type=float, default=None)
    p.add_argument("--smooth-t0", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--p", type=float, default=None, help="energy exponent")

    p = sub.add_parser("check", help="randomized inequality suites")
    common(p)
    p.add_argument("--suite", type=str, default=None,
                   choices=["holder", "low-exponent", "sublevel", "comparison",
                            "maximum", "dirichlet"])
    p.add_argument("--trials", type=int, default=None)

    p = sub.add_parser("hausdorff", help="Hausdorff content / polarity probe")
    common(p)
    p.add_argument("--set", dest="set_spec", type=str, default=None,
                   help="ball:r=..  point  segment:len=..")
    p.add_argument("--probe", action="store_true", default=None)
    return ap


DEFAULTS = dict(n=2, m=1, R=2.0, res=17, tol=None, max_iter=None, seed=0,
                out=None, alpha=0.5, kappa=0.7, cap=None, smooth_t0=None,
                thresholds=False, samples=200, r=1.0, radial_only=False,
                backend="grid-relaxation", measure="phi_alpha", value=1.0,
                bumps=None, file=None, profile="phi_alpha", p=1.0,
                suite="holder", trials=100, set_spec="point", probe=False)


def _merge_config(args) -> dict:
    """Layer: defaults < config file ([common] then [<subcommand>]) < flags."""
    merged = dict(DEFAULTS)
    cfgpath = getattr(args, "config", None)
    if cfgpath:
        cp = configparser.ConfigParser()
        read = cp.read(cfgpath)
        if not read:
            raise ValidationError(f"config file not readable: {cfgpath}")
        known = set(DEFAULTS)
        for section in ("common", args.command):
            if not cp.has_section(section):
                continue
            for key, val in cp.items(section):
                k = key.replace("-", "_")
                if k not in known:
                    raise ValidationError(
                        f"unknown config key {key!r} in [{section}]")
                merged[k] = _coerce(val, DEFAULTS.get(k))
    for k, v in vars(args).items():
        if k in ("command", "config"):
            continue
        if v is not None:
            merged[k] = v
    return merged


def _coerce(val: str, template):
    if isinstance(template, bool):
        return val.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(template, int) and not isinstance(template, bool):
        return int(val)
    if isinstance(template, float):
        return float(val)
    if template is None:
        try:
            return float(val)
        except ValueError:
            return val
    return val


def _validate(opt, command):
    n, m = opt["n"], opt["m"]
    if n < 1 or not (1 <= m <= n):
        raise ValidationError(f"need 1 <= m <= n, got n={n} m={m}")
    if opt["R"] <= 0:
        raise ValidationError("R must be positive")
    if command in ("capacity", "envelope", "hausdorff") or \
            (command == "solve" and opt["backend"] != "radial") or \
            (command == "check" and opt["suite"] in
             ("holder", "comparison", "maximum", "dirichlet") and n == 2):
        res = opt["res"]
        if res < 9 or res % 2 == 0:
            raise ValidationError("res must be an odd integer >= 9")
    if opt.get("alpha") is not None and opt["alpha"] <= 0:
        raise ValidationError("alpha must be positive")
    if opt.get("trials") is not None and opt["trials"] < 1:
        raise ValidationError("trials must be >= 1")
    if opt.get("p") is not None and opt["p"] < 0:
        raise ValidationError("energy exponent p must be >= 0")


def _domain(opt) -> GridDomain:
    if opt["n"] != 2:
        raise ValidationError("full-grid operations require n = 2 "
                              "(use the radial backend for other n)")
    return GridDomain(n=2, m=opt["m"], R=opt["R"], points_per_axis=opt["res"])


def _summary(command, text, runtime):
    print(f"{command}: {text} runtime={runtime:.2f}s")


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_radial(opt):
    n, m, R = opt["n"], opt["m"], opt["R"]
    alpha = opt["alpha"]
    t0 = time.time()
    if opt["thresholds"]:
        q_max, p_max = class_thresholds(alpha, n, m)
        rows = [dict(alpha=alpha, q_max=q_max, p_max=p_max)]
        if opt["out"]:
            emit_report(rows, opt["out"], ["alpha", "q_max", "p_max"])
        _summary("radial", f"alpha={alpha:g} q_max={q_max:.6g} "
                           f"p_max={p_max:.6g}", time.time() - t0)
        return EXIT_OK
    prof = phi_alpha_profile(alpha, n, m, R=R, cap=opt["cap"],
                             smooth_t0=opt["smooth_t0"])
    smax = R * (1 - 1e-9)
    s = np.linspace(R * 0.02, smax, opt["samples"])
    dens = radial_hessian_density(prof, s)
    u = prof.value_at_radius(s)
    if opt["out"]:
        rows = [dict(s=float(si), u=float(ui), density=float(di))
                for si, ui, di in zip(s, u, dens)]
        emit_report(rows, opt["out"], ["s", "u", "density"])
    slope = np.polyfit(np.log(s), np.log(np.maximum(dens, 1e-300)), 1)[0]
    _summary("radial", f"alpha={alpha:g} density log-log slope={slope:.4f} "
                       f"(analytic {-2*m*(alpha+1):g})", time.time() - t0)
    return EXIT_OK


def _cmd_capacity(opt):
    n, m, r, R = opt["n"], opt["m"], opt["r"], opt["R"]
    t0 = time.time()
    if not (0 < r < R):
        raise ValidationError("need 0 < r < R")
    if m >= n:
        raise ValidationError("capacity formula needs m < n")
    formula = cap_of_ball_formula(r, R, n, m)
    prof = extremal_ball_profile(r, R, n, m)
    radial_val = radial_total_mass(prof)
    rows = [dict(method="formula", value=formula, rel_gap=0.0),
            dict(method="radial", value=radial_val,
                 rel_gap=abs(radial_val - formula) / formula)]
    text = (f"formula={formula:.6g} radial={radial_val:.6g} "
            f"(rel {rows[1]['rel_gap']:.2e})")
    if n == 2 and not opt["radial_only"]:
        dom = _domain(opt)
        res = relative_extremal(GridSet.ball((0, 0, 0, 0), r), dom)
        rows.append(dict(method="grid", value=res.value,
                         rel_gap=abs(res.value - formula) / formula))
        text += f" grid={res.value:.6g} (rel {rows[2]['rel_gap']:.2e})"
    if opt["out"]:
        emit_report(rows, opt["out"], ["method", "value", "rel_gap"])
    _summary("capacity", text, time.time() - t0)
    return EXIT_OK


def _cmd_envelope(opt):
    dom = _domain(opt)
    r, R = opt["r"], opt["R"]
    if not (0 < r < R):
        raise ValidationError("need 0 < r < R")
    t0 = time.time()
    E = GridSet.ball((0, 0, 0, 0), r)
    mask = E.mask(dom)
    prob = ObstacleProblem(dom, GridFunction(dom, np.where(mask, -1.0, 0.0)),
                           tolerance=opt["tol"] or 1e-8,
                           max_sweeps=opt["max_iter"] or 50000, sharp_set=E)
    env = msh_envelope(prob)
    bal = balayage_check(prob, env)
    text = f"sweeps={env.sweeps} residual={env.residual:.2e} balayage={bal:.2e}"
    if dom.m < dom.n:
        prof = extremal_ball_profile(r, R, dom.n, dom.m)
        exact = np.where(dom.interior,
                         np.maximum(np.interp(dom.radius_sq, prof.t, prof.chi),
                                    -1.0), 0.0)
        gap = float(np.abs(env.values - exact)[dom.interior].max())
        text += f" sup_gap_vs_formula={gap:.4f}"
    if opt["out"]:
        save_grid(opt["out"] + ".grid", env)
        with open(opt["out"] + ".csv", "w") as fh:
            grid_to_csv(env, fh)
    _summary("envelope", text, time.time() - t0)
    return EXIT_OK


def _parse_bumps(spec: str):
    out = []
    for part in spec.split(";"):
        kv = dict(item.split("=") for item in part.split(","))
        out.append((float(kv["r"]), float(kv["w"]), float(kv["mass"])))
    return out


def _radial_measure(opt, n, R) -> RadialMeasure:
    kind = opt["measure"]
    if kind == "phi_alpha":
        prof = phi_alpha_profile(opt["alpha"], n, opt["m"], R=R,
                                 cap=opt["cap"], smooth_t0=opt["smooth_t0"])
        return measure_of_profile(prof)
    if kind == "power":
        prof = power_profile(opt["kappa"], n, opt["m"], R,
                             smooth_t0=opt["smooth_t0"])
        return measure_of_profile(prof)
    if kind == "constant":
        t = np.concatenate([[0.0], np.geomspace(R * R * 1e-8, R * R, 4096)])
        return RadialMeasure(n=n, R=R, t=t,
                             f=np.full_like(t, float(opt["value"])))
    if kind == "bumps":
        if not opt["bumps"]:
            raise ValidationError("--bumps spec required for measure=bumps")
        t = np.concatenate([[0.0], np.geomspace(R * R * 1e-8, R * R, 8192)])
        s = np.sqrt(t)
        f = np.zeros_like(t)
        for (rc, w, mass) in _parse_bumps(opt["bumps"]):
            shape = np.exp(-((s - rc) / w) ** 2)
            norm = np.trapezoid(shape * volume_factor(n) * t ** (n - 1), t)
            f += mass * shape / max(norm, 1e-300)
        return RadialMeasure(n=n, R=R, t=t, f=f)
    raise ValidationError(f"measure {kind!r} not supported on the radial backend")


def _grid_measure(opt, dom: GridDomain):
    kind = opt["measure"]
    if kind == "file":
        if not opt["file"]:
            raise ValidationError("--file required for measure=file")
        from .grid import load_grid
        gf = load_grid(opt["file"])
        if gf.domain.shape != dom.shape:
            raise ValidationError("measure grid resolution mismatch")
        return np.maximum(gf.values, 0.0)
    if kind == "constant":
        return np.where(dom.interior, float(opt["value"]), 0.0)
    mu = _radial_measure(opt, dom.n, dom.R)
    if mu.surface:
        raise ValidationError("grid backend needs absolutely continuous mu "
                              "(cap produces surface mass; use --smooth-t0)")

    def density(d):
        return np.where(d.interior, np.interp(d.radius_sq, mu.t, mu.f), 0.0)
    return density


def _cmd_solve(opt):
    t0 = time.time()
    backend = opt["backend"]
    cfg = SolveConfig(backend=backend, tolerance=opt["tol"] or 1e-5,
                      max_iterations=opt["max_iter"] or 60000)
    if backend == "radial":
        mu = _radial_measure(opt, opt["n"], opt["R"])
        result = solve_radial(mu, (opt["n"], opt["m"]), cfg)
        rows = [dict(iteration=i, residual=r, F_value=F)
                for (i, r, F) in result.history] or [
            dict(iteration=1, residual=result.residual, F_value=result.F_value)]
        if opt["out"]:
            emit_report(rows, opt["out"] + "_convergence.csv",
                        ["iteration", "residual", "F_value"])
            prof = result.solution
            rows2 = [dict(t=float(ti), chi=float(ci))
                     for ti, ci in zip(prof.t[:: max(1, len(prof.t) // 4096)],
                                       prof.chi[:: max(1, len(prof.t) // 4096)])]
            emit_report(rows2, opt["out"] + "_profile.csv", ["t", "chi"])
    else:
        dom = _domain(opt)
        mu = _grid_measure(opt, dom)
        fn = solve_grid if backend == "grid-relaxation" else solve_variational
        result = fn(mu, dom, cfg)
        if opt["out"]:
            save_grid(opt["out"] + ".grid", result.solution)
            rows = [dict(iteration=i, residual=r, F_value=F)
                    for (i, r, F) in result.history]
            emit_report(rows, opt["out"] + "_convergence.csv",
                        ["iteration", "residual", "F_value"])
    _summary("solve", f"backend={backend} residual={result.residual:.3e} "
                      f"F={result.F_value:.6g} iters={result.iterations} "
                      f"converged={result.converged}", time.time() - t0)
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def _cmd_energy(opt):
    n, m, R, p = opt["n"], opt["m"], opt["R"], opt["p"]
    t0 = time.time()
    kind = opt["profile"]
    if kind == "phi_alpha":
        prof = phi_alpha_profile(opt["alpha"], n, m, R=R, cap=opt["cap"],
                                 smooth_t0=opt["smooth_t0"])
    elif kind == "extremal":
        prof = extremal_ball_profile(opt["r"], R, n, m)
    elif kind == "power":
        prof = power_profile(opt["kappa"], n, m, R,
                             smooth_t0=opt["smooth_t0"])
    else:
        prof = quadratic_profile(n, m, R, scale=1.0 / (R * R))
    Ep = energy_Ep(prof, p)
    mass = radial_total_mass(prof)
    Fv = math.nan
    if prof.bounded and math.isfinite(Ep):
        Fv = functional_F(prof, measure_of_profile(prof))
    rows = [dict(profile=kind, p=p, E_p=Ep, total_mass=mass, F_own=Fv)]
    if opt["out"]:
        emit_report(rows, opt["out"],
                    ["profile", "p", "E_p", "total_mass", "F_own"])
    _summary("energy", f"profile={kind} E_{p:g}={Ep:.6g} mass={mass:.6g} "
                       f"F={Fv:.6g}", time.time() - t0)
    return EXIT_OK


def _cmd_check(opt):
    t0 = time.time()
    rng = np.random.default_rng(opt["seed"])
    suite = opt["suite"]
    trials = opt["trials"]
    n, m, R = opt["n"], opt["m"], opt["R"]
    rows = []
    violations = 0

    def record(name, lhs, rhs, margin, slack):
        nonlocal violations
        rows.append(dict(test=name, lhs=lhs, rhs=rhs, margin=margin,
                         seed=opt["seed"]))
        if margin < -slack:
            violations += 1

    if suite == "holder":
        use_grid = (n == 2) and opt["res"] >= 9 and rng is not None
        dom = _domain(opt) if use_grid else None
        for k in range(trials):
            p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
            if use_grid and k % 2 == 0:
                u = random_grid_function(rng, dom)
                vs = [random_grid_function(rng, dom) for _ in range(m)]
            else:
                u = random_radial_profile(rng, n, m, R)
                vs = [random_radial_profile(rng, n, m, R) for _ in range(m)]
            rep = holder_energy_check(u, vs, p)
            record(f"holder[{k}]", rep.lhs, rep.rhs, rep.margin,
                   1e-6 * abs(rep.rhs) + 1e-12)
    elif suite == "low-exponent":
        for k in range(trials):
            p = float(rng.uniform(0.15, 0.9))
            kk = int(rng.integers(1, m + 1))
            u = random_radial_profile(rng, n, m, R)
            v = random_radial_profile(rng, n, m, R)
            T = [random_radial_profile(rng, n, m, R) for _ in range(m - kk)]
            rep = low_exponent_check(u, v, p, kk, T)
            record(f"lowexp[{k}]", rep.lhs, rep.rhs, rep.margin,
                   1e-6 * abs(rep.rhs) + 1e-12)
    elif suite == "sublevel":
        if m >= n:
            raise ValidationError("sublevel suite needs m < n (alpha family)")
        for k in range(trials):
            amax = (n - m) / m
            alpha = float(rng.uniform(0.1, 0.9) * amax)
            M = float(rng.uniform(0.5, 3.0))
            prof = phi_alpha_profile(alpha, n, m, R=R, cap=M)
            p = float(rng.choice([0.5, 1.0, 2.0]))
            tlev = float(rng.uniform(0.05, 1.5))
            rep = sublevel_capacity_check(prof, p, tlev)
            record(f"sublevel[{k}]", rep.lhs, rep.rhs, rep.margin,
                   1e-9 * abs(rep.rhs))
    elif suite == "comparison":
        dom = _domain(opt)
        for k in range(trials):
            u, v = random_ordered_pair(rng, dom)
            rep = comparison_harness(u, v)
            slack = 1e-3 * max(abs(rep.mass_u_on_set), abs(rep.mass_v_on_set),
                               1e-9)
            record(f"comparison[{k}]", rep.mass_u_on_set, rep.mass_v_on_set,
                   rep.margin, slack)
    elif suite == "maximum":
        dom = _domain(opt)
        for k in range(trials):
            u = random_grid_function(rng, dom)
            v = random_grid_function(rng, dom)
            rep = maximum_principle_check(u, v)
            gap_tol = 20 * dom.h**2 + 1e-9
            record(f"maximum[{k}]", rep.sup_gap, gap_tol, gap_tol - rep.sup_gap,
                   0.0)
    elif suite == "dirichlet":
        dom = _domain(opt)
        prof = phi_alpha_profile(0.3, 2, 1, R=R, smooth_t0=0.25 * R * R / 4) \
            if m == 1 else power_profile(0.7, 2, 2, R, smooth_t0=R * R / 8)
        from .radial import density_samples as _ds

        def mu(d):
            return np.where(d.interior, np.interp(d.radius_sq, prof.t,
                                                  _ds(prof)), 0.0)
        res = solve_grid(mu, dom, SolveConfig(tolerance=1e-5))
        from .grid import MeasureDensity
        mu_dens = MeasureDensity(dom, mu(dom))
        F_star = functional_F(res.solution, mu_dens)
        for k in range(trials):
            psi = random_grid_function(rng, dom)
            Fp = functional_F(psi, mu_dens)
            record(f"dirichlet[{k}]", F_star, Fp, Fp - F_star,
                   1e-4 * abs(F_star) + 1e-9)
    else:
        raise ValidationError(f"unknown suite {suite!r}")

    if opt["out"]:
        emit_report(rows, opt["out"], ["test", "lhs", "rhs", "margin", "seed"])
    _summary("check", f"suite={suite} trials={trials} violations={violations}",
             time.time() - t0)
    return EXIT_OK if violations == 0 else EXIT_NONCONVERGED


def _parse_set(spec: str, dom: GridDomain):
    kind, _, rest = spec.partition(":")
    kv = dict(item.split("=") for item in rest.split(",") if item)
    if kind == "ball":
        return GridSet.ball((0, 0, 0, 0), float(kv.get("r", 0.5)))
    if kind == "point":
        return GridSet.ball((0, 0, 0, 0), 1e-9)
    if kind == "segment":
        # complex line segment {(t, 0): |t| <= len/2} as a thin box
        half = float(kv.get("len", 1.0)) / 2
        return GridSet(boxes=(((0, 0, 0, 0),
                               (half, half, dom.h / 4, dom.h / 4)),))
    raise ValidationError(f"unknown set spec {spec!r}")


def _cmd_hausdorff(opt):
    dom = _domain(opt)
    t0 = time.time()
    E = _parse_set(opt["set_spec"], dom)
    exponent = 2 * dom.n - 2 * dom.m
    content = hausdorff_content(E, dom, exponent)
    text = f"set={opt['set_spec']} content(r^{exponent})={content:.6g}"
    rows = [dict(eps=math.nan, capacity=math.nan, content=content,
                 ratio=math.nan)]
    if opt["probe"]:
        rep = polarity_probe(E, dom)
        rows = [dict(eps=e, capacity=c, content=ct, ratio=rt)
                for (e, c, ct, rt) in zip(rep.eps, rep.capacity, rep.content,
                                          rep.ratio)]
        text += f" fitted_cap_exponent={rep.fitted_exponent:.3f}"
    if opt["out"]:
        emit_report(rows, opt["out"], ["eps", "capacity", "content", "ratio"])
    _summary("hausdorff", text, time.time() - t0)
    return EXIT_OK


# ---------------------------------------------------------------------------

def run(argv) -> int:
    if os.environ.get("MHESS_THREADS"):
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, os.environ["MHESS_THREADS"])
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_VALIDATION if e.code not in (0, None) else 0
    try:
        opt = _merge_config(args)
        _validate(opt, args.command)
        handler = {"radial": _cmd_radial, "capacity": _cmd_capacity,
                   "envelope": _cmd_envelope, "solve": _cmd_solve,
                   "energy": _cmd_energy, "check": _cmd_check,
                   "hausdorff": _cmd_hausdorff}[args.command]
        return handler(opt)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (EnvelopeError, MassNotConvergedError, NotMSubharmonicError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
