"""Distorted Fourier transform, scattering matrix and eigenfunction data.

The transform F^+-(lam) maps a (compactly supported) state to one complex
coefficient per (end, mode): the averaged large-radius limit of

    xi(r) = sqrt(b) * exp(-+ i Phi(r)) * u(r),      Phi(r) = int_{r0}^r b,

where u is the flat radial profile of the limiting resolvent applied to
the state.  Averages are taken over dyadic windows [R, 2R]; convergence
across R-doublings (plus one geometric extrapolation) is the acceptance
test for the limit.

The scattering matrix at energy lam is block diagonal over angular modes;
each 2x2 block solves F^+ = S F^- over a family of probe states, in the
least-squares sense.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import ManifoldModel, bump, phase_a, phase_b, phase_integral
from .mode_reduction import ModeOperator, RadialGrid
from .resolvent import JostPair, jost_pair, limiting_resolvent

__all__ = [
    "BoundaryField",
    "ScatteringData",
    "distorted_ft",
    "scattering_matrix",
    "transmission_metric",
    "wkb_eigenfunction",
    "generalized_eigenfunction",
    "eigenfunction_decompose",
]


@dataclass
class BoundaryField:
    """Asymptotic data at one energy: one coefficient per (mode, end).

    Coefficients are normalized so that sum of |.|^2 equals the squared
    norm in the boundary space (orthonormal mode basis on each end
    circle)."""

    lam: float
    sign: int
    modes: Tuple[int, ...]
    data: np.ndarray  # (n_modes, 2)
    diag: dict = field(default_factory=dict)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.data) ** 2))

    def coeff(self, m: int, end: int) -> complex:
        return complex(self.data[self.modes.index(m), end])


def _averaged_limit(r: np.ndarray, xi: np.ndarray, r_min: float, tol: float):
    """Means of xi over dyadic windows [R, 2R] with one geometric
    extrapolation step.  Returns (value, diag)."""
    means = []
    R = r_min
    while 2.0 * R <= r[-1] + 1e-9:
        msk = (r >= R) & (r <= 2.0 * R)
        if np.count_nonzero(msk) < 8:
            break
        means.append(np.mean(xi[msk]))
        R *= 2.0
    if not means:
        raise ValueError("extraction window empty; increase rmax")

    def _geo_tail(seq):
        # one Aitken-style step for a geometrically converging sequence
        d1, d2 = seq[-2] - seq[-3], seq[-1] - seq[-2]
        if abs(d1) > 0 and abs(d2 / d1) < 0.75:
            q = d2 / d1
            return seq[-1] + d2 * q / (1.0 - q), True
        return seq[-1], False

    value = means[-1]
    extrapolated = False
    if len(means) >= 3:
        rho = np.abs(means)
        if rho[-1] > 1e-8 * max(1.0, rho.max()):
            # modulus and phase converge at different rates; extrapolate
            # them separately to keep the faster modulus convergence clean
            theta = np.unwrap(np.angle(means))
            rho_inf, ok1 = _geo_tail(list(rho))
            theta_inf, ok2 = _geo_tail(list(theta))
            value = rho_inf * np.exp(1j * theta_inf)
            extrapolated = ok1 or ok2
        else:
            value, extrapolated = _geo_tail(means)
    resid = abs(means[-1] - means[-2]) if len(means) >= 2 else np.inf
    scale = max(abs(value), 1e-300)
    return value, {
        "means": means,
        "doubling_residual": float(resid / scale),
        "converged": bool(resid <= tol * scale or scale <= tol),
        "extrapolated": extrapolated,
    }


def _extract_end(model: ManifoldModel, grid: RadialGrid, end: int, lam: float,
                 sign: int, u_line: np.ndarray, r_lam: float, tol: float):
    """Boundary coefficient of one end from a resolvent profile."""
    mask = grid.end_mask(end, r_min=0.0)
    r = grid.r[mask]
    u = u_line[mask]
    order = np.argsort(r)
    r, u = r[order], u[order]
    b = np.real(phase_b(model, end, lam, r, r_lam=r_lam))
    phi = phase_integral(model, end, lam, r, r_lam=r_lam)
    xi = np.sqrt(np.maximum(b, 0.0)) * np.exp(-1j * sign * phi) * u
    r_min = max(2.0 * r_lam, grid.rmax / 16.0)
    return _averaged_limit(r, xi, r_min, tol)


def distorted_ft(ops: Sequence[ModeOperator], lam: float, psi_modes: np.ndarray,
                 sign: int = +1, tol_f: float = 1e-4,
                 pairs: Optional[Sequence[JostPair]] = None) -> BoundaryField:
    """F^+-(lam) psi for a multi-mode flat state.

    ``ops`` is one ModeOperator per row of ``psi_modes``.  The +i0
    (outgoing) transform uses sign=+1.  Jost pairs may be passed in to
    amortize the ODE solves over many states at the same energy.
    """
    psi_modes = np.atleast_2d(np.asarray(psi_modes, dtype=complex))
    model = ops[0].model
    grid = ops[0].grid
    data = np.zeros((len(ops), 2), dtype=complex)
    diags: List[dict] = []
    for i, op in enumerate(ops):
        pair = pairs[i] if pairs is not None else None
        phi, rdiag = limiting_resolvent(op, lam, psi_modes[i], sign=sign, pair=pair)
        row = {"resolvent": rdiag, "ends": []}
        for end in range(2):
            val, ediag = _extract_end(model, grid, end, lam, sign, phi,
                                      rdiag["r_lam"], tol_f)
            data[i, end] = val
            row["ends"].append(ediag)
        diags.append(row)
    modes = tuple(op.m for op in ops)
    return BoundaryField(lam, sign, modes, data, {"per_mode": diags})


@dataclass
class ScatteringData:
    """S(lam): one 2x2 block per angular mode (ends x ends)."""

    lam: float
    modes: Tuple[int, ...]
    blocks: np.ndarray  # (n_modes, 2, 2)
    unitarity_defect: float
    diag: dict = field(default_factory=dict)

    def block(self, m: int) -> np.ndarray:
        return self.blocks[self.modes.index(m)]


def _probe_states(grid: RadialGrid, model: ManifoldModel, n_per_end: int = 2):
    """Smooth bumps parked on either end just outside the core, used as the
    over-determined probe family for the least-squares S solve."""
    x = grid.x
    out = []
    for end, sgn in ((0, 1.0), (1, -1.0)):
        for p in range(n_per_end):
            c = sgn * (model.r0 + 2.0 + 2.5 * p)
            mod = np.exp(1j * 0.4 * (p + 1) * x) if p else 1.0
            out.append(bump(x, center=c, width=1.0) * mod)
    return out


def scattering_matrix(model: ManifoldModel, grid: RadialGrid, lam: float,
                      mmax: int = 0, tol_s: float = 1e-6, tol_f: float = 1e-4,
                      stencil_order: int = 4, n_probe: int = 2) -> ScatteringData:
    """Assemble S(lam) mode block by mode block.

    For each |m| <= mmax the probe family is pushed through both signed
    transforms and S_m solves F^+ = S_m F^- in the least-squares sense.
    Blocks for -m equal those for m (rotational symmetry).  The
    unitarity defect max_m ||S_m* S_m - 1|| is reported and compared to
    tol_s in the diagnostics.
    """
    probes = _probe_states(grid, model, n_probe)
    modes = tuple(range(0, mmax + 1))
    blocks = np.zeros((len(modes), 2, 2), dtype=complex)
    per_mode = []
    for i, m in enumerate(modes):
        op = ModeOperator(model, grid, m, stencil_order=stencil_order)
        cols_p = np.zeros((2, len(probes)), dtype=complex)
        cols_m = np.zeros((2, len(probes)), dtype=complex)
        pair_p = jost_pair(op, lam, +1)
        pair_m = jost_pair(op, lam, -1)
        worst = 0.0
        for j, psi in enumerate(probes):
            fp = distorted_ft([op], lam, psi, +1, tol_f, pairs=[pair_p])
            fm = distorted_ft([op], lam, psi, -1, tol_f, pairs=[pair_m])
            cols_p[:, j] = fp.data[0]
            cols_m[:, j] = fm.data[0]
            worst = max(worst, *(e["doubling_residual"]
                                 for d in (fp, fm)
                                 for e in d.diag["per_mode"][0]["ends"]))
        # solve S cols_m = cols_p  (least squares over the probe family)
        s_t, res, *_ = np.linalg.lstsq(cols_m.T, cols_p.T, rcond=None)
        blocks[i] = s_t.T
        per_mode.append({"m": m, "doubling_residual": worst,
                         "fminus_cond": float(np.linalg.cond(cols_m))})
    defects = [float(np.linalg.norm(b.conj().T @ b - np.eye(2), 2)) for b in blocks]
    diag = {"per_mode": per_mode, "defects": defects,
            "unitary_within_tol": bool(max(defects) <= tol_s)}
    return ScatteringData(lam, modes, blocks, max(defects), diag)


def transmission_metric(sdata: ScatteringData, i: int = 1, j: int = 0) -> dict:
    """Smallest singular value of the cross-ends block S_ij over the
    computed modes (the block is mode-diagonal, so singular values are
    the per-mode moduli).  Positive values certify injectivity of
    transmission from end j to end i at this energy."""
    mods = np.abs(sdata.blocks[:, i, j])
    k = int(np.argmin(mods))
    return {"sigma_min": float(np.min(mods)), "argmin_mode": sdata.modes[k],
            "per_mode": mods.tolist()}


def wkb_eigenfunction(model: ManifoldModel, grid: RadialGrid, lam: float,
                      end: int, sign: int = +1, xi: complex = 1.0,
                      r_lam: Optional[float] = None) -> np.ndarray:
    """Flat-profile WKB generalized eigenfunction phi^+-[xi] on one end:

        eta_lam(r) [2(lam - q1)]^(-1/4) exp(+- i Phi(r)) xi,

    zero on the opposite end (line array over the whole grid)."""
    if r_lam is None:
        r_lam = model.r_lambda(lam)
    mask = grid.end_mask(end, r_min=0.0)
    r = grid.r[mask]
    order = np.argsort(r)
    r_sorted = r[order]
    eta = model.cutoffs.eta(r_sorted, r_lam)
    q1 = model.ends[end].q1(r_sorted)
    amp = eta * np.where(lam > q1, 2.0 * np.abs(lam - q1), 1.0) ** -0.25
    phi = phase_integral(model, end, lam, r_sorted, r_lam=r_lam)
    vals = amp * np.exp(1j * sign * phi) * xi
    out = np.zeros(grid.x.size, dtype=complex)
    idx = np.where(mask)[0][order]
    out[idx] = vals
    return out


def generalized_eigenfunction(op: ModeOperator, lam: float,
                              xi_plus: Sequence[complex],
                              pair: Optional[JostPair] = None):
    """Solution of (H_m - lam) phi = 0 on the line with prescribed
    *outgoing* boundary data xi_plus = (end0, end1).

    Built as a combination of the two outgoing Jost solutions, whose
    outgoing data matrix is inverted.  Returns (phi, diag) with the
    incoming data (hence the mode's S-matrix column space) in diag.
    """
    if pair is None:
        pair = jost_pair(op, lam, +1)
    grid = op.grid
    basis = [pair.u_right, pair.u_left]
    O = np.zeros((2, 2), dtype=complex)
    I = np.zeros((2, 2), dtype=complex)
    for k, u in enumerate(basis):
        xp, xm, _ = eigenfunction_decompose(op, lam, u, r_lam=pair.r_lam)
        O[:, k] = xp
        I[:, k] = xm
    c = np.linalg.solve(O, np.asarray(xi_plus, dtype=complex))
    phi = c[0] * basis[0] + c[1] * basis[1]
    s_block = O @ np.linalg.inv(I)
    return phi, {"coefficients": c, "outgoing_matrix": O,
                 "incoming_matrix": I, "s_block": s_block,
                 "xi_minus": I @ c}


def eigenfunction_decompose(op: ModeOperator, lam: float, phi_line: np.ndarray,
                            tol: float = 1e-4, r_lam: Optional[float] = None):
    """Outgoing/incoming boundary data of a generalized eigenfunction.

    Per end, the two coefficients are averaged limits of

        (1/2) b^(-1/2) exp(-+ i Phi) (A +- b) phi,    A = -i d/dr,

    which project onto the exp(+- i Phi) travelling components.  Returns
    (xi_plus, xi_minus, diag); diag also carries the annulus-mean energy
    density check  2(|xi_+|^2 + |xi_-|^2) vs mean of |b^(1/2) phi|^2.
    """
    model = op.model
    grid = op.grid
    if r_lam is None:
        r_lam = model.r_lambda(lam)
    dphi = np.gradient(phi_line, grid.dx, edge_order=2)
    dphi_r = np.where(grid.x >= 0, dphi, -dphi)
    xi_p = np.zeros(2, dtype=complex)
    xi_m = np.zeros(2, dtype=complex)
    diag = {"ends": []}
    for end in range(2):
        mask = grid.end_mask(end, r_min=0.0)
        r = grid.r[mask]
        order = np.argsort(r)
        r_s = r[order]
        u = phi_line[mask][order]
        du = dphi_r[mask][order]
        b = np.real(phase_b(model, end, lam, r_s, r_lam=r_lam))
        phi_acc = phase_integral(model, end, lam, r_s, r_lam=r_lam)
        safe_b = np.maximum(b, 1e-12)
        r_min = max(2.0 * r_lam, grid.rmax / 16.0)
        entry = {}
        for sgn, store in ((+1, xi_p), (-1, xi_m)):
            integ = 0.5 * safe_b**-0.5 * np.exp(-1j * sgn * phi_acc) * (
                -1j * du + sgn * b * u)
            val, d = _averaged_limit(r_s, integ, r_min, tol)
            store[end] = val
            entry["plus" if sgn > 0 else "minus"] = d
        msk = r_s >= r_min
        entry["energy_mean"] = float(np.mean(np.abs(np.sqrt(safe_b[msk]) * u[msk]) ** 2))
        diag["ends"].append(entry)
    diag["energy_identity"] = {
        "lhs": 2.0 * float(np.sum(np.abs(xi_p) ** 2 + np.abs(xi_m) ** 2)) / 2.0,
        "rhs": float(sum(e["energy_mean"] for e in diag["ends"])),
    }
    return xi_p, xi_m, diag
