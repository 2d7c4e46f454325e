"""Self-contained invariant checks behind the ``verify-properties`` command.

Each check recomputes both sides of an identity numerically and reports a
pass/fail with the worst relative error observed.  These mirror the pytest
property suite but run standalone, without test tooling.
"""

import numpy as np

from . import detect, modem, zak

REL_TOL = 1e-8


def _rel(err, scale):
    return err / max(scale, 1e-300)


def _random_frame_signal(p, rng):
    x = rng.normal(size=p.frame_len) + 1j * rng.normal(size=p.frame_len)
    return zak.SampledSignal(samples=x, step=p.step)


def check_zak_roundtrip(rng):
    worst = 0.0
    for lam, mu in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)]:
        p = zak.ZakParams(lam=lam, mu=mu, samples_per_T=8, periods=6)
        x = _random_frame_signal(p, rng)
        xr = zak.zak_to_time(zak.zak_transform(x, p), p)
        worst = max(worst, _rel(np.max(np.abs(xr.samples - x.samples)), np.max(np.abs(x.samples))))
    return worst


def check_quasi_periodicity(rng):
    worst = 0.0
    for lam, mu in [(1.0, 1.0), (2.0, 1.0)]:
        p = zak.ZakParams(lam=lam, mu=mu, samples_per_T=8, periods=6)
        x = _random_frame_signal(p, rng)
        v = zak.zak_transform(x, p).values
        shifted = zak.SampledSignal(
            samples=np.roll(x.samples.reshape(p.periods, p.block_len), -1, axis=0).reshape(-1),
            step=p.step,
        )
        vs = zak.zak_transform(shifted, p).values
        phase = np.exp(2j * np.pi * p.nu_grid * p.T / p.mu)
        worst = max(worst, _rel(np.max(np.abs(vs - v * phase[None, :])), np.max(np.abs(v))))
    return worst


def check_multiplication(rng):
    p = zak.ZakParams(samples_per_T=8, periods=6)
    a, b = _random_frame_signal(p, rng), _random_frame_signal(p, rng)
    va = zak.zak_transform(a, p).values
    vb = zak.zak_transform(b, p).values
    vc = zak.zak_transform(
        zak.SampledSignal(samples=a.samples * b.samples, step=p.step), p
    ).values
    conv = np.zeros_like(vc)
    for bb in range(p.periods):
        for bp in range(p.periods):
            conv[:, bb] += va[:, (bb - bp) % p.periods] * vb[:, bp]
    rhs = np.sqrt(p.lam * p.T) / (p.lam * p.mu) * conv * p.nu_step
    return _rel(np.max(np.abs(vc - rhs)), np.max(np.abs(vc)))


def check_convolution(rng):
    p = zak.ZakParams(samples_per_T=8, periods=6)
    a, b = _random_frame_signal(p, rng), _random_frame_signal(p, rng)
    n = p.frame_len
    c = p.step * np.fft.ifft(np.fft.fft(a.samples) * np.fft.fft(b.samples))
    va = zak.zak_transform(a, p).values
    vb = zak.zak_transform(b, p).values
    vc = zak.zak_transform(zak.SampledSignal(samples=c, step=p.step), p).values
    twist = np.exp(-2j * np.pi * p.nu_grid * p.T / p.mu)
    rhs = np.zeros_like(vc)
    for aa in range(p.block_len):
        for ap in range(p.block_len):
            d = aa - ap
            term = va[d, :] if d >= 0 else va[d + p.block_len, :] * twist
            rhs[aa, :] += term * vb[ap, :]
    rhs *= p.step / np.sqrt(p.lam * p.T)
    return _rel(np.max(np.abs(vc - rhs)), np.max(np.abs(vc)))


def check_completeness(rng):
    p = zak.ZakParams(samples_per_T=4, periods=4)
    x = _random_frame_signal(p, rng)
    recon = np.zeros(p.frame_len, dtype=complex)
    for a in range(p.block_len):
        for b in range(p.periods):
            coef = zak.basis_coefficient(x, p.tau_grid[a], p.nu_grid[b], p)
            atom = zak.render_impulse_train(
                zak.impulse_basis(p.tau_grid[a], p.nu_grid[b], p), p
            )
            recon += coef * atom.samples * p.step * p.nu_step * (p.lam * p.mu)
    return _rel(np.max(np.abs(recon - x.samples)), np.max(np.abs(x.samples)))


def check_modem_bridge(rng):
    worst = 0.0
    for alpha, beta in [(1.0, 1.0), (0.8, 0.9), (0.675, 0.675)]:
        params = modem.ModemParams(m=4, n=4, alpha=alpha, beta=beta)
        s = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        lhs = modem.wigner_rect(modem.modulate(s, params), params)
        a = modem.build_doppler_matrix(alpha, 4)
        b = modem.build_delay_matrix(beta, 4)
        worst = max(worst, _rel(np.max(np.abs(lhs - a @ s @ b.conj().T)), np.max(np.abs(lhs))))
    return worst


def check_objective_decomposition(rng):
    a = modem.build_doppler_matrix(0.8, 5)
    b = modem.build_delay_matrix(0.7, 3)
    y = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    model = detect.build_effective_model(a, b, y)
    s = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    total = detect.total_objective(model, s)
    parts = sum(
        detect.partial_metric(model, s, r, c) for r in range(5) for c in range(3)
    )
    return _rel(abs(total - parts), abs(total))


def check_schedule_soundness(_rng):
    for n in range(1, 7):
        for m in range(1, 7):
            order = detect.wavefront_schedule(n, m)
            if len(order) != n * m or len(set(order)) != n * m:
                return 1.0
            seen = set()
            for r, c in order:
                quad = {(i, j) for i in range(r, n) for j in range(c, m)} - {(r, c)}
                if not quad <= seen:
                    return 1.0
                seen.add((r, c))
    return 0.0


def check_counter_conformance(_rng):
    qpsk = modem.qpsk()
    for m, n in [(2, 2), (4, 4), (4, 8)]:
        a = modem.build_doppler_matrix(0.9, n)
        b = modem.build_delay_matrix(0.9, m)
        y = np.ones((n, m), dtype=complex)
        model = detect.build_effective_model(a, b, y)
        _, _, counter = detect.sd2d_decode(model, qpsk, k_list=1)
        want = detect.predicted_complexity(m, n)
        if counter.complex_mults != want.mults or counter.complex_adds != want.adds:
            return 1.0
    return 0.0


def check_ml_equivalence(rng):
    from itertools import product

    qpsk = modem.qpsk()
    a = modem.build_doppler_matrix(0.775, 2)
    b = modem.build_delay_matrix(0.775, 2)
    frames = np.array([np.array(pts).reshape(2, 2) for pts in product(qpsk.points, repeat=4)])
    for _ in range(20):
        s = qpsk.points[rng.integers(0, 4, size=(2, 2))]
        y = a @ s @ b.conj().T + 0.3 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        model = detect.build_effective_model(a, b, y)
        s_hat, _, _ = detect.sd2d_decode(model, qpsk, k_list=256)
        objs = [detect.total_objective(model, f) for f in frames]
        if not np.isclose(detect.total_objective(model, s_hat), min(objs)):
            return 1.0
    return 0.0


CHECKS = [
    ("zak round trip (time inversion)", check_zak_roundtrip),
    ("zak quasi-periodicity", check_quasi_periodicity),
    ("zak multiplication image", check_multiplication),
    ("zak convolution image", check_convolution),
    ("zak basis completeness", check_completeness),
    ("modem effective-model bridge", check_modem_bridge),
    ("objective decomposition", check_objective_decomposition),
    ("wavefront schedule soundness", check_schedule_soundness),
    ("operation-counter conformance", check_counter_conformance),
    ("small-frame ML equivalence", check_ml_equivalence),
]


def run_all(seed=0):
    """Run every check; returns a list of (name, passed, worst_rel_error)."""
    results = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        worst = fn(rng)
        results.append((name, worst <= REL_TOL, worst))
    return results
