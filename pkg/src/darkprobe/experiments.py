"""Experiment configurations and runners.

Each runner takes a validated config and returns named column tables plus a
summary dict; the CLI turns those into CSV files and a manifest.  All
frequencies in configs are ordinary frequencies (``*_over_2pi``) and are
converted to angular units here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from . import core, fixtures, noise, oscillator, spin, twospin
from .fock import OscState

TWO_PI = 2 * math.pi

PositiveInt = Annotated[int, Field(ge=1)]
PositiveFloat = Annotated[float, Field(gt=0)]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Linspace(_Model):
    """Evenly spaced grid of ``points`` values from start to stop inclusive."""

    start: float
    stop: float
    points: PositiveInt

    @model_validator(mode="after")
    def _ordered(self):
        if self.points > 1 and not self.stop > self.start:
            raise ValueError("stop must exceed start")
        return self

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


NList = Annotated[list[PositiveInt], Field(min_length=1)]


class SpinFieldsConfig(_Model):
    omega0_over_2pi: PositiveFloat = 1.0
    a_z_over_2pi: float = 0.015
    a_x_over_2pi: float = 0.08

    def build(self) -> spin.SpinFields:
        return spin.SpinFields(TWO_PI * self.omega0_over_2pi, TWO_PI * self.a_z_over_2pi,
                               TWO_PI * self.a_x_over_2pi)


def _nv_lab_fields() -> SpinFieldsConfig:
    fx = fixtures.FIXTURES["nv-lab"]
    return SpinFieldsConfig(omega0_over_2pi=fx["gamma_over_2pi"] * fx["field_tesla"],
                            a_z_over_2pi=fx["a_parallel_over_2pi"],
                            a_x_over_2pi=fx["a_perp_over_2pi"])


class BlochConfig(_Model):
    r: tuple[float, float, float] = (0.3, 0.4, -0.2)

    @model_validator(mode="after")
    def _inside(self):
        if np.linalg.norm(self.r) > 1 + 1e-12:
            raise ValueError("Bloch vector must have norm <= 1")
        return self


class SearchGridConfig(_Model):
    tau_max_over_tau1: PositiveFloat = 3.0
    tau_points: PositiveInt = 600
    n_max: PositiveInt = 40
    cos_tol: PositiveFloat = spin.COS_PHI_TOL

    def build(self) -> spin.SearchGrid:
        return spin.SearchGrid(self.tau_max_over_tau1, self.tau_points, self.n_max, self.cos_tol)


class _Experiment(_Model):
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0
    output_dir: str | None = None


class SpinScanConfig(_Experiment):
    """|sin(phi) n_y| and cos(phi) over a (tau, N) grid; tau in units of tau1."""

    experiment: Literal["spin-scan"]
    fields: SpinFieldsConfig = SpinFieldsConfig()
    tau_over_tau1: Linspace = Linspace(start=0.005, stop=3.0, points=600)
    n_segments: NList = list(range(1, 21))


class SpinReconstructConfig(_Experiment):
    experiment: Literal["spin-reconstruct"]
    fields: SpinFieldsConfig = SpinFieldsConfig()
    bloch: BlochConfig = BlochConfig()
    x_grid: SearchGridConfig = SearchGridConfig()
    z_grid: SearchGridConfig = SearchGridConfig(tau_max_over_tau1=40.0, tau_points=8000)


class SpinNoiseConfig(_Experiment):
    experiment: Literal["spin-noise"]
    fields: SpinFieldsConfig = Field(default_factory=_nv_lab_fields)
    bloch: BlochConfig = BlochConfig(r=(0.0, 0.4, 0.0))
    tau_seconds: PositiveFloat = 3e-6
    n_segments: PositiveInt = 10
    tb_seconds: Annotated[list[PositiveFloat], Field(min_length=1)] = [0.2e-3, 0.5e-3, 1e-3]
    b0_over_2pi: Annotated[list[Annotated[float, Field(ge=0)]], Field(min_length=1)] = [
        9e3, 28e3, 56e3, 112e3]
    dt_seconds: PositiveFloat | None = None
    realizations: PositiveInt = 1000
    pulses: bool = True


class EstimateCouplingConfig(_Experiment):
    """Synthetic cos(phi) scan of a known spin, then recovery of (a_z, a_x).

    tau is given in units of the bare period 2 pi / omega0.
    """

    experiment: Literal["estimate-coupling"]
    fields: SpinFieldsConfig = SpinFieldsConfig()
    tau_periods: Linspace = Linspace(start=0.45, stop=0.55, points=401)
    n_segments: NList = list(range(1, 21))
    readout_noise: Annotated[float, Field(ge=0)] = 0.0


class OscConfig(_Model):
    nu_over_2pi: PositiveFloat = 1.0
    g_over_nu: PositiveFloat = 3 / 40

    def build(self) -> oscillator.OscParams:
        nu = TWO_PI * self.nu_over_2pi
        return oscillator.OscParams(nu, self.g_over_nu * nu)


class StateConfig(_Model):
    kind: Literal["fock", "coherent", "squeezed"] = "squeezed"
    n: Annotated[int, Field(ge=0)] = 0
    eta_re: float = 1.0
    eta_im: float = 0.0
    lam: float = math.log(0.5)

    def build(self) -> OscState:
        if self.kind == "fock":
            return OscState.fock(self.n)
        if self.kind == "coherent":
            return OscState.coherent(complex(self.eta_re, self.eta_im))
        return OscState.squeezed(self.lam)


class OscCurvesConfig(_Experiment):
    experiment: Literal["osc-curves"]
    oscillator: OscConfig = OscConfig()
    tau_points: PositiveInt = 600
    n_segments: NList = list(range(1, 21))


class OscSampleConfig(_Experiment):
    experiment: Literal["osc-sample"]
    oscillator: OscConfig = OscConfig()
    state: StateConfig = StateConfig()
    tau_points: PositiveInt = 600
    n_segments: NList = list(range(1, 21))
    sampling: Literal["exact", "simulate"] = "exact"
    dim: PositiveInt = 40


class OscReconstructConfig(_Experiment):
    experiment: Literal["osc-reconstruct"]
    oscillator: OscConfig = OscConfig()
    state: StateConfig = StateConfig()
    tau_points: PositiveInt = 600
    n_segments: NList = list(range(1, 21))
    sampling: Literal["exact", "simulate"] = "exact"
    grid_points: PositiveInt = 161
    radius: PositiveFloat | None = None
    interpolation: Literal["cubic", "linear"] = "cubic"
    dim: PositiveInt = 40
    max_negative_mass: PositiveFloat = 0.05


class FockBenchmarkConfig(_Experiment):
    experiment: Literal["fock-benchmark"]
    oscillator: OscConfig = OscConfig()
    fock_n: Annotated[list[Annotated[int, Field(ge=0)]], Field(min_length=1)] = [0, 1, 2]
    n_tilde: NList = list(range(1, 21))
    tau_points: PositiveInt = 600
    grid_points: PositiveInt = 161
    dim: PositiveInt = 40


TwoSpinState = Literal["bell-plus", "bell-minus", "product-01", "product-10", "product-00"]


class TwoSpinFieldsConfig(_Model):
    omega0_over_2pi: PositiveFloat = 1.0
    A_x_over_2pi: float = 0.01
    a_z1_over_2pi: float = 0.01
    a_z2_over_2pi: float = -0.01
    a_x1_over_2pi: float = 0.01
    a_x2_over_2pi: float = 0.01

    def build(self) -> twospin.TwoSpinParams:
        return twospin.TwoSpinParams(*(TWO_PI * v for v in (
            self.omega0_over_2pi, self.A_x_over_2pi, self.a_z1_over_2pi, self.a_z2_over_2pi,
            self.a_x1_over_2pi, self.a_x2_over_2pi)))


class TwoSpinConfig(_Experiment):
    """Witness readout; tau/N default to the pseudo-spin r~_y setting."""

    experiment: Literal["twospin"]
    fields: TwoSpinFieldsConfig = TwoSpinFieldsConfig()
    states: Annotated[list[TwoSpinState], Field(min_length=1)] = [
        "bell-plus", "bell-minus", "product-01", "product-10"]
    tau_seconds: PositiveFloat | None = None
    n_segments: PositiveInt | None = None


ExperimentConfig = Annotated[
    Union[SpinScanConfig, SpinReconstructConfig, SpinNoiseConfig, EstimateCouplingConfig,
          OscCurvesConfig, OscSampleConfig, OscReconstructConfig, FockBenchmarkConfig,
          TwoSpinConfig],
    Field(discriminator="experiment"),
]
CONFIG_ADAPTER = TypeAdapter(ExperimentConfig)
EXPERIMENTS = ("spin-scan", "spin-reconstruct", "spin-noise", "estimate-coupling", "osc-curves",
               "osc-sample", "osc-reconstruct", "fock-benchmark", "twospin")


def parse_config(data: dict):
    return CONFIG_ADAPTER.validate_python(data)


@dataclass
class ExperimentResult:
    tables: dict[str, dict] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


# runners


def run_spin_scan(c: SpinScanConfig) -> ExperimentResult:
    f = c.fields.build()
    taus = c.tau_over_tau1.values() * f.tau1
    ns = np.asarray(c.n_segments)
    cos_phi, w = spin.scan_observable(f, taus, ns)
    nn, tt = np.meshgrid(ns, taus, indexing="ij")
    table = {"tau": tt.ravel(), "tau_over_tau1": (tt / f.tau1).ravel(), "N": nn.ravel(),
             "cos_phi": cos_phi.ravel(), "w_x": w[0].ravel(), "w_y": w[1].ravel(),
             "w_z": w[2].ravel(), "abs_sin_phi_ny": np.abs(w[1]).ravel()}
    i, j = np.unravel_index(np.argmax(np.abs(w[1])), cos_phi.shape)
    summary = {"tau1": f.tau1, "omega1": f.omega1,
               "max_abs_sin_phi_ny": float(abs(w[1][i, j])),
               "argmax_tau_over_tau1": float(taus[j] / f.tau1), "argmax_N": int(ns[i])}
    return ExperimentResult({"scan": table}, summary)


def _setting_row(s: spin.DesignedSetting, sy: float) -> dict:
    return {"component": s.component, "tau": s.seq.tau, "N": s.seq.n_segments,
            "cos_phi": s.cos_phi, "w_x": s.weighted_axis[0], "w_y": s.weighted_axis[1],
            "w_z": s.weighted_axis[2], "achieved": s.achieved, "measured_sy": sy}


def run_spin_reconstruct(c: SpinReconstructConfig) -> ExperimentResult:
    from .io import stack_rows

    f = c.fields.build()
    r_true = np.array(c.bloch.r)
    settings = spin.design_settings(f, c.x_grid.build(), c.z_grid.build())
    measured = [spin.simulate_sy(f, s.seq, r_true) for s in settings]
    rec = spin.reconstruct_bloch(settings, f, measured)
    rows = [_setting_row(s, m) for s, m in zip(settings, measured)]
    result = {"component": ["x", "y", "z"], "r_true": r_true, "r_estimated": rec.r,
              "error": rec.r - r_true}
    summary = {"error_norm": float(np.linalg.norm(rec.r - r_true)), "clipped": rec.clipped,
               "condition_number": rec.condition_number}
    return ExperimentResult({"settings": stack_rows(rows), "bloch": result}, summary)


def run_spin_noise(c: SpinNoiseConfig) -> ExperimentResult:
    f = c.fields.build()
    seq = core.PulseSequence(c.tau_seconds, c.n_segments)
    rho = core.bloch_density(c.bloch.r)
    clean = spin.spin_observable(f, seq)
    sy_clean = -float(clean.weighted_axis @ np.array(c.bloch.r))
    rows = {k: [] for k in ("tb", "b0_over_2pi", "sx_mean", "sx_stderr", "sy_mean", "sy_stderr",
                            "sy_noiseless", "dt")}
    tau_used = seq.tau
    for tb in c.tb_seconds:
        for b0 in c.b0_over_2pi:
            m = noise.NoiseModel(TWO_PI * b0, tb, c.dt_seconds, c.seed, c.realizations)
            r = noise.noisy_spin_measurement(f, seq, rho, m, pulses=c.pulses)
            tau_used = r.tau_used
            for k, v in (("tb", tb), ("b0_over_2pi", b0), ("sx_mean", r.sx_mean),
                         ("sx_stderr", r.sx_stderr), ("sy_mean", r.sy_mean),
                         ("sy_stderr", r.sy_stderr), ("sy_noiseless", sy_clean), ("dt", r.dt_used)):
                rows[k].append(v)
    summary = {"sy_noiseless": sy_clean, "tau_used": tau_used,
               "tau_snapped": bool(abs(tau_used - seq.tau) > 1e-12 * seq.tau)}
    return ExperimentResult({"noise": rows}, summary)


def run_estimate_coupling(c: EstimateCouplingConfig) -> ExperimentResult:
    f = c.fields.build()
    taus = c.tau_periods.values() * TWO_PI / f.omega0
    scan = spin.cos_phi_scan(f, taus, c.n_segments)
    if c.readout_noise > 0:
        rng = np.random.default_rng(c.seed)
        scan = spin.CosPhiScan(scan.taus, scan.ns,
                               scan.cos_phi + c.readout_noise * rng.standard_normal(scan.cos_phi.shape))
    est = spin.estimate_coupling(scan, f.omega0)
    nn, tt = np.meshgrid(scan.ns, scan.taus, indexing="ij")
    table = {"tau": tt.ravel(), "N": nn.ravel(), "sx": scan.cos_phi.ravel()}
    rel = {"a_z_rel_err": (est.a_z - f.a_z) / f.a_z if f.a_z else math.nan,
           "a_x_rel_err": (est.a_x - abs(f.a_x)) / abs(f.a_x) if f.a_x else math.nan}
    estimate = {"quantity": ["a_z_over_2pi", "a_x_over_2pi", "tau1", "omega1_over_2pi"],
                "true": [f.a_z / TWO_PI, f.a_x / TWO_PI, f.tau1, f.omega1 / TWO_PI],
                "estimated": [est.a_z / TWO_PI, est.a_x / TWO_PI, est.tau1, est.omega1 / TWO_PI]}
    summary = dict(rel, n_opt=est.n_opt, n_used=est.n_used)
    return ExperimentResult({"scan": table, "estimate": estimate}, summary)


def _curve_table(p: oscillator.OscParams, taus, ns) -> dict:
    xi = np.stack([oscillator.xi_curve(p, taus, n) for n in ns])
    nn, tt = np.meshgrid(ns, taus, indexing="ij")
    return {"tau": tt.ravel(), "N": nn.ravel(), "xi": xi.ravel()}


def run_osc_curves(c: OscCurvesConfig) -> ExperimentResult:
    p = c.oscillator.build()
    taus = oscillator.default_tau_grid(p, c.tau_points)
    table = _curve_table(p, taus, c.n_segments)
    free = {"tau": taus, "xi": oscillator.xi_free(p, taus)}
    summary = {"max_abs_xi": float(np.abs(table["xi"]).max()),
               "bound_4N_g_over_nu": 4 * max(c.n_segments) * p.ratio}
    return ExperimentResult({"curves": table, "free": free}, summary)


def _samples_table(s: oscillator.ChiSamples) -> dict:
    return {"tau": s.tau, "N": s.n_segments, "xi": s.xi, "chi": s.chi, "mirrored": s.mirrored}


def run_osc_sample(c: OscSampleConfig) -> ExperimentResult:
    p = c.oscillator.build()
    state = c.state.build()
    taus = oscillator.default_tau_grid(p, c.tau_points)
    s = oscillator.sample_characteristic(p, c.n_segments, taus, state, method=c.sampling, dim=c.dim)
    err = float(np.max(np.abs(s.chi - state.chi(s.xi))))
    return ExperimentResult({"samples": _samples_table(s)},
                            {"state": state.label, "max_abs_err_vs_exact": err})


def run_osc_reconstruct(c: OscReconstructConfig) -> ExperimentResult:
    p = c.oscillator.build()
    state = c.state.build()
    taus = oscillator.default_tau_grid(p, c.tau_points)
    samples = oscillator.sample_characteristic(p, c.n_segments, taus, state,
                                               method=c.sampling, dim=c.dim)
    grid = oscillator.interpolate_chi(samples, points=c.grid_points, radius=c.radius,
                                      method=c.interpolation)
    rec = oscillator.reconstruct_density(grid, c.dim, max_negative_mass=c.max_negative_mass)
    td = core.trace_distance(rec.rho, state.density(c.dim))
    pts = grid.points
    field_table = {"xi": pts.ravel(), "chi": grid.field.ravel(), "flagged": grid.flagged.ravel()}
    nn, mm = np.meshgrid(np.arange(c.dim), np.arange(c.dim), indexing="ij")
    matrix = {"n": nn.ravel(), "m": mm.ravel(), "rho": rec.rho.ravel(), "raw": rec.raw.ravel()}
    summary = dict(rec.report(), state=state.label, trace_distance=td, grid=grid.metadata)
    return ExperimentResult({"grid": field_table, "matrix": matrix}, summary)


def run_fock_benchmark(c: FockBenchmarkConfig) -> ExperimentResult:
    p = c.oscillator.build()
    taus = oscillator.default_tau_grid(p, c.tau_points)
    rows = oscillator.fock_benchmark(p, c.fock_n, c.n_tilde, taus, points=c.grid_points, dim=c.dim)
    n, nt, td = zip(*rows)
    return ExperimentResult({"trace_distance": {"n": n, "n_tilde": nt, "trace_distance": td}},
                            {"final": {str(a): d for a, b, d in rows if b == max(c.n_tilde)}})


def two_spin_state(name: str) -> np.ndarray:
    basis = np.eye(4, dtype=complex)  # |00>, |01>, |10>, |11>
    vec = {"bell-plus": basis[1] + basis[2], "bell-minus": basis[1] - basis[2],
           "product-01": basis[1], "product-10": basis[2], "product-00": basis[0]}[name]
    # normalise the outer product so the Bell entries are exactly 1/2
    return np.outer(vec, vec.conj()) / np.vdot(vec, vec).real


def run_twospin(c: TwoSpinConfig) -> ExperimentResult:
    import warnings

    p = c.fields.build()
    if c.tau_seconds is None or c.n_segments is None:
        s = twospin.witness_settings(p)
        seq = core.PulseSequence(c.tau_seconds or s.seq.tau, c.n_segments or s.seq.n_segments)
    else:
        seq = core.PulseSequence(c.tau_seconds, c.n_segments)
    cols = {k: [] for k in ("state", "tau", "N", "r_x_witness", "r_y_witness", "sy_closed",
                            "sy_oracle", "abs_err", "subspace_population", "leakage")}
    for name in c.states:
        rho2 = two_spin_state(name)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # empty-subspace states are part of the table
            res = twospin.witness_measurement(p, seq, rho2)
        rx, ry = twospin.witnesses(rho2)
        for k, v in zip(cols, (name, seq.tau, seq.n_segments, rx, ry, *res)):
            cols[k].append(v)
    summary = {"max_abs_err": float(max(cols["abs_err"])), "max_coupling_over_omega0":
               p.max_coupling / p.omega0, "weak_coupling": p.weak_coupling}
    return ExperimentResult({"witness": cols}, summary)


RUNNERS = {
    "spin-scan": run_spin_scan,
    "spin-reconstruct": run_spin_reconstruct,
    "spin-noise": run_spin_noise,
    "estimate-coupling": run_estimate_coupling,
    "osc-curves": run_osc_curves,
    "osc-sample": run_osc_sample,
    "osc-reconstruct": run_osc_reconstruct,
    "fock-benchmark": run_fock_benchmark,
    "twospin": run_twospin,
}


def run_experiment(config) -> ExperimentResult:
    return RUNNERS[config.experiment](config)
