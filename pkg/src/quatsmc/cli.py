"""Command-line front end: ``quatsmc constants | check | synthesize | simulate``.

Exit codes: 0 pass, 2 check failure, 3 config or file error, 4 synthesis abort.
"""
from __future__ import annotations

import dataclasses

import functools
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import bracket as bk
from . import cohomo, gosl, lyap, quat, realrep, sim, synth
from .config import load
from .errors import AbortError, ConfigError, DivergenceError
from .report import Report, dumps, synthesis_from_dict, synthesis_to_dict

EXIT_OK = 0
EXIT_CHECK = 2
EXIT_CONFIG = 3
EXIT_ABORT = 4


def _common(fn):
    @click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
                  help="Run configuration (JSON).")
    @click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                  help="Directory for JSON/CSV outputs.")
    @click.option("--seed", type=int, default=None, help="Override the config seed.")
    @click.option("--samples", type=int, default=None, help="Override the estimation sample count.")
    @click.option("--workers", type=int, default=None, help="Worker threads for sampling.")
    @functools.wraps(fn)
    def wrapper(config_path, out_dir, seed, samples, workers, **kw):
        try:
            rc = load(config_path, seed=seed, samples=samples, workers=workers)
            code = fn(rc, Path(out_dir) if out_dir else None, **kw)
        except ConfigError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        sys.exit(code)
    return wrapper


def _emit(report, out, filename):
    click.echo(report.table(), nl=False)
    for n in report.notes:
        click.echo(f"note: {n}")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(report.to_json())


def _constants_and_eps(rc):
    const = rc.bracket_constants()
    return const, rc.eps_star(const)


def _synthesize(rc, const, eps):
    s = rc.synthesis
    return synth.algorithm1(rc.plant, const, eps_star=eps, beta_init=s["beta_init"], young=s["young"],
                            max_halvings=s["max_halvings"], simplified=s["simplified"])


def _abort(report, exc):
    report.check("algorithm1", False, f"self-consistent initialization aborted at step {exc.step}")
    report.note(str(exc))
    for entry in exc.audit:
        report.note("audit " + json.dumps({k: _scalar(v) for k, v in entry.items()}, sort_keys=True))


def _scalar(v):
    if isinstance(v, (list, tuple)):
        return [_scalar(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Quaternion integral sliding-mode control toolkit."""


@main.command()
@_common
def constants(rc, out):
    """Bracket constants, bound bundle and certificate values for a config."""
    ref = rc.reference.get
    rep = Report("constants", rc.name, rc.fingerprint)
    spec = rc.spec
    if rc.constants_mode == "estimate":
        const = rc.bracket_constants()
        A_hat, C2_hat = const.A, const.C2
    else:
        const = rc.declared_constants()
        A_hat = bk.estimate_A(spec, rc.samples, rc.seed, rc.workers)
        C2_hat = bk.estimate_C2(spec, rc.samples, rc.seed + 2, rc.workers)
    eps = rc.eps_star(const)
    rep.add("A", A_hat, "sampled sup ||L(x,y)|| / (||x|| ||y||) with hill-climb refinement", ref("A"))
    rep.add("six_C2", 6.0 * C2_hat, "sampled sup ||J(x,y,z)|| / (||x|| ||y|| ||z||)", ref("six_C2"))
    rep.add("C2", const.C2, f"C2 used downstream ({rc.constants_mode})", ref("C2"))
    rep.add("C1", const.C1, f"C1 used downstream ({rc.constants_mode})", ref("C1"))
    bundle = cohomo.cnc_bundle(const.C2, eps)
    rep.add("omega_op_bound", bundle.omega_op, "8 C2 eps*", ref("omega_op_bound"))
    rep.add("C_nc", bundle.cnc, "min(12 C2, 3 omega_op + 6 C2)", ref("C_nc"))
    rep.add("C_nc_bookkeeping", bundle.bookkeeping_bound, "3 omega_op + 6 C2", ref("C_nc_bookkeeping"))
    rep.add("eps_star", const.eps_star_generic, "min(1/(16A), sqrt(1/(16 C1)), 1/(4 C2), eps0)", ref("eps_star"))
    rep.add("eps_star_antisymmetric", const.eps_star_antisym, "min(1/(8A), 1/(4 C2), eps0)",
            ref("eps_star_antisymmetric"))
    rep.add("M0_max", eps / math.sqrt(2.0), "eps* / sqrt(2)", ref("M0_max"))
    M0 = quat.norm(rc.plant.x0) + rc.plant.margin
    rep.add("M0", M0, "||x0|| + margin", ref("M0"))
    gc = gosl.gosl_constants(const.C2, bundle.cnc, M0, eps)
    rep.add("R_max", gc.r_max, "C_nc M0 (M0 + eps*)^2", ref("R_max"))
    rep.add("deltabar_max", gc.deltabar_max, "6 C2 M0 (M0 + eps*)^2", ref("deltabar_max"))
    rep.add("rho_tight", gc.rho_tight, "12 C2 (M0 + eps*)(3 M0 + eps*)", ref("rho_tight"))
    rep.add("ell_tight", gc.ell_tight, "4 deltabar_max", ref("ell_tight"))
    g = synth.plant_gains(rc.plant)
    rep.add("c_Bplus", g.c_Bplus, "1 / sigma_min(Phi(B))", ref("c_Bplus"))
    try:
        res = _synthesize(rc, const, eps)
    except AbortError as exc:
        _abort(rep, exc)
        _emit(rep, out, "constants.json")
        return EXIT_ABORT
    rep.add("beta_star", res.lmi.beta_star, "bisection optimum of the decay LMI", ref("beta_star"))
    rep.add("mu_lmi", res.lmi.mu_lmi, "lambda_max(P*) after box iteration", ref("mu_lmi"))
    rep.add("kappa_inf", res.kappa_inf,
            "mu*^2 (c C_nc e^2)^2 / (rho - mu_Y) + mu* (24 C2 e^2)^2 / mu_Y", ref("kappa_inf"))
    book = lyap.kappa_infty(res.lmi.mu_lmi, g.chain, bundle.bookkeeping_bound, eps, const.C2,
                            res.rho_eff, res.mu_Y)
    rep.add("kappa_inf_bookkeeping", book, "kappa_inf with C_nc = 3 omega_op + 6 C2",
            ref("kappa_inf_bookkeeping"))
    rep.add("eta", res.eta, "c_C c_B c_B+ R_max + ||K|| c_C M0 + eta0", ref("eta"))
    _emit(rep, out, "constants.json")
    return EXIT_OK if rep.passed else EXIT_CHECK


@main.command()
@_common
def check(rc, out):
    """Matching condition, GOSL inequality and norm-transfer property suite."""
    rep = Report("check", rc.name, rc.fingerprint)
    c = rc.check
    const, eps = _constants_and_eps(rc)
    cm = cohomo.cmc_check(rc.spec, rc.plant.B, eps, c["cmc_samples"], rc.seed, c["cmc_tol"])
    rep.check("cmc_passed", cm.passed, "||(I - Pi_B) e|| <= tol ||e|| + 1e-12 max||e|| over d omega0 and J")
    rep.add("cmc_max_residual", cm.max_residual, "max ||(I - Pi_B) e||")
    rep.add("cmc_coboundary_residual", cm.coboundary_residual, "max ||(I - Pi_B) d omega0||")
    rep.add("cmc_defect_residual", cm.defect_residual, "max ||(I - Pi_B) J||")
    rep.add("cmc_cone_discrepancy", cm.cone_discrepancy, "max ||d omega0 - J(x, y, x + y)||")
    M0 = quat.norm(rc.plant.x0) + rc.plant.margin
    bundle = cohomo.cnc_bundle(const.C2, eps)
    gc = gosl.gosl_constants(const.C2, bundle.cnc, M0, eps)
    gr = gosl.verify_gosl(rc.spec, rc.plant.B, gc, c["gosl_pairs"], rc.seed)
    rep.check("gosl_passed", gr.violations == 0,
              "<d(x) - d(z), h> <= rho_tight ||h||^2 + ell_tight ||h|| + 1e-10 on the M0-ball")
    rep.add("gosl_violations", gr.violations, f"count over {gr.pairs} seeded pairs")
    rep.add("gosl_max_slack", gr.max_slack, "max lhs - rhs")
    rep.add("gosl_max_defect", gr.max_defect, "max ||Pi_B J(x, x + xi1, x + xi2)|| over sampled states")
    nt = realrep.norm_transfer_suite(c["norm_transfer_cases"], c["norm_transfer_max_n"], rc.seed)
    rep.check("norm_transfer_passed", nt.passed, "| ||T^L|| - ||T|| | <= 1e-10 on seeded random square T")
    rep.add("norm_transfer_max_difference", nt.max_difference, f"max over {nt.cases} operators")
    _emit(rep, out, "check.json")
    return EXIT_OK if rep.passed else EXIT_CHECK


def _synthesis_report(rep, res):
    rep.add("M0", res.M0, "domain radius after halvings")
    rep.add("halvings", res.halvings, "number of M0 halvings")
    rep.add("eta", res.eta, "c_C c_B c_B+ R_max + ||K|| c_C M0 + eta0")
    rep.add("beta_star", res.lmi.beta_star, "bisection optimum of the decay LMI")
    rep.add("mu_lmi", res.lmi.mu_lmi, "lambda_max(P*) after box iteration")
    rep.add("lmi_iterations", res.lmi.iterations, "box-parameter updates")
    rep.add("lambda_min_P", res.lmi.lambda_min, "lambda_min(P*)")
    rep.add("P_star", res.lmi.P_star, "LMI certificate, real representation")
    rep.add("theta", res.lmi.theta, "mu (2 rho + mu_Y) + rho - mu_Y")
    rep.add("rho_eff", res.rho_eff, "rho_tight + 2 L_r M0")
    rep.add("mu_Y", res.mu_Y, "Young parameter")
    rep.add("C_inf", res.c_inf, "mu*^2 w^2 / (rho - mu_Y) + mu* ell^2 / mu_Y")
    rep.add("kappa_inf", res.kappa_inf, "M0-free invariance threshold")
    rep.add("Lambda", res.lambda_peak, "reaching-phase growth bound")
    rep.add("R", res.R_invariance, "sqrt(kappa(P*) M0^2 + C_inf / (lambda_min(P*) beta*))")
    rep.check("peaking_ok", res.peaking_ok, "T*_max Lambda(M0) < margin")
    rep.check("invariance_ok", res.invariance_ok, "beta* lambda_min(P*) > kappa_inf")


@main.command()
@_common
def synthesize(rc, out):
    """Run the self-consistent initialization and persist the synthesis artifact."""
    rep = Report("synthesize", rc.name, rc.fingerprint)
    const, eps = _constants_and_eps(rc)
    try:
        res = _synthesize(rc, const, eps)
    except AbortError as exc:
        _abort(rep, exc)
        _emit(rep, out, "synthesize.json")
        return EXIT_ABORT
    _synthesis_report(rep, res)
    rep.check("eta_margin_ok", res.eta - res.gains.chain * res.gosl.r_max >= rc.plant.eta0 - 1e-15,
              "eta - c_C c_B c_B+ R_max >= eta0")
    _emit(rep, out, "synthesize.json")
    if out is not None:
        (out / "synthesis.json").write_text(dumps(synthesis_to_dict(res, rc.fingerprint, rc.name)))
    else:
        click.echo("note: no --out given, synthesis artifact not written")
    return EXIT_OK if rep.passed else EXIT_CHECK


@main.command()
@_common
@click.option("--synthesis", "synthesis_path", required=True, type=click.Path(dir_okay=False),
              help="Synthesis artifact written by `synthesize`.")
def simulate(rc, out, synthesis_path):
    """Closed-loop and reduced-dynamics runs with envelope and reaching checks."""
    path = Path(synthesis_path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"synthesis artifact not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"synthesis artifact {path} is not valid JSON") from exc
    res = synthesis_from_dict(data, rc.fingerprint)
    s = rc.simulation
    cfg = sim.SimConfig(rc.plant, res, s["dt"], s["t_end"], s["boundary_layer"], seed=rc.seed,
                        control_on=s["control_on"])
    rep = Report("simulate", rc.name, rc.fingerprint)
    try:
        cl = sim.integrate_closed_loop(cfg)
        red = sim.integrate_reduced(cfg, beta_star=res.lmi.beta_star)
    except DivergenceError as exc:
        rep.check("bounded", False, "||x|| <= 10 eps* throughout")
        rep.note(str(exc))
        _emit(rep, out, "simulate.json")
        return EXIT_CHECK
    env = sim.envelope_check(red, res.lmi.beta_star, res.c_inf)
    bound = sim.reaching_bound(rc.plant, cfg.dt)
    s_max = float(quat.norm(cl.sliding).max())
    xr_max = float(quat.norm(red.states).max())
    rep.add("steps", cfg.steps, "t_end / dt")
    if cfg.control_on:
        rep.check("envelope_ok", env.passed, "V_r(t) <= exp(-beta* t) V_r(0) + C_inf / beta* + tol")
        reached = cl.reaching_time is not None and cl.reaching_time <= bound
        rep.check("reaching_ok", reached, "first t with ||s|| <= phi_bl is at most ||s0|| / eta0 + 2 dt")
        rep.check("invariance_ok", xr_max <= res.R_invariance, "max ||x_r(t)|| <= R")
    else:
        rep.note("u = 0 ablation: envelope and reaching checks not asserted")
    rep.add("envelope_violations", env.violations, f"count over {env.samples} samples")
    rep.add("envelope_max_overshoot", env.max_overshoot, "max V_r - envelope")
    rep.add("envelope_tol", env.tol, "1e-6 V_r(0) + dt^2 V_r(0)")
    rep.add("reaching_time", -1.0 if cl.reaching_time is None else cl.reaching_time,
            "first t with ||s(t)|| <= phi_bl (-1 if never)")
    rep.add("reaching_bound", bound, "||s0|| / eta0 + 2 dt")
    rep.add("max_sliding_norm", s_max, "max ||s(t)||")
    after = s_max if cl.reaching_time is None else float(quat.norm(cl.sliding[cl.times >= cl.reaching_time]).max())
    rep.add("max_sliding_after_reach", after, "max ||s(t)|| for t >= reaching time")
    if cfg.control_on:
        rep.check("boundary_layer_held", cl.reaching_time is not None and after <= cfg.boundary_layer,
                  "||s(t)|| <= phi_bl for all t after reaching")
    rep.add("max_reduced_norm", xr_max, "max ||x_r(t)||")
    rep.add("R", res.R_invariance, "invariance radius from synthesis")
    # coarse base step: at the production dt the halved runs agree to roundoff
    coarse = dataclasses.replace(cfg, dt=s["convergence_dt"])
    dts, diffs, orders = sim.convergence_order(coarse, horizon=s["convergence_horizon"])
    rep.add("dt_halving_dts", dts, "dt / 2^k")
    rep.add("dt_halving_differences", diffs, "||x_T(dt_k) - x_T(dt_{k+1})|| with frozen selection")
    rep.add("dt_halving_orders", orders, "log2 of consecutive difference ratios")
    rep.note("dt halving orders: " + ", ".join(f"{o:.3f}" for o in orders))
    _emit(rep, out, "simulate.json")
    if out is not None:
        sim.write_csv(cl, out / "closed_loop.csv")
        sim.write_csv(red, out / "reduced.csv")
    return EXIT_OK if rep.passed else EXIT_CHECK


if __name__ == "__main__":
    main()
