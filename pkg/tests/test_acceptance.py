"""One test group per acceptance criterion; verdict lines appear in the terminal summary."""
import json
import math
import time

import numpy as np
import pytest

from ftqlab.cli import main
from ftqlab.codes import load_code
from ftqlab.ftscheme import build_rec, build_round_trip, monte_carlo_rec, sweep_interface_faults, sweep_single_faults
from ftqlab.golden import load_cases, run_case
from ftqlab.noise import adversarial_truncation, audit_local_stochastic, compose_batches, iid_batch, streamed_counts, tail_sum
from ftqlab.rng import stream
from ftqlab.singleshot import Frame, build_syndrome_extraction, memory_experiment, run_ec_round
from ftqlab.teleport import AncillaSpec, gate_set, verify_logical_action
from ftqlab.toric import CommExperimentConfig, bound_zeta, estimate_logical_failure, exhaustive_correction, monotone_within_ci
from ftqlab.decoders import lookup_minweight_decoder
from ftqlab.pauli import weight_at_most

SEED = 2024


# 1 -----------------------------------------------------------------------------------------------


def test_criterion_1_representation_golden(acceptance):
    t0 = time.time()
    cases = [c for c in load_cases() if c["code_id"] == "bitflip3"]
    kinds = {c["channel_kind"] for c in cases}
    assert {"transversal_X", "unitary_rule_X", "prep_0", "measure_Z"} <= kinds
    results = [run_case(c) for c in cases]
    for c in cases:
        assert sorted(c["error_basis"]) == ["III", "IIX", "IXI", "XII"]
    worst = max(r["residual"] for r in results)
    ok = all(r["pass"] for r in results) and worst <= 1e-10
    elapsed = time.time() - t0
    acceptance(1, ok and elapsed < 5, f"{len(results)} bit-flip cases, worst residual {worst:.1e}, {elapsed:.1f}s")
    assert ok and elapsed < 5


# 2 -----------------------------------------------------------------------------------------------


def test_criterion_2_adversarial_grid(acceptance):
    rows = []
    for n in (50, 100, 200, 400):
        for d in (0.02, 0.05, 0.1):
            if n * d < 1:
                continue
            t, bound = adversarial_truncation(n, d)
            assert t == math.ceil(5 * n * d / (1 + d) - 1e-12)
            assert bound == math.exp(-n * d / 3)
            rows.append(tail_sum(n, d, t) <= bound)
    ok = all(rows)
    acceptance(2, ok, f"{sum(rows)}/{len(rows)} grid points with tail_sum <= exp(-n delta/3)")
    assert ok


# 3 -----------------------------------------------------------------------------------------------


def test_criterion_3_local_stochastic_audits(acceptance):
    t0 = time.time()
    iid = streamed_counts(lambda size, c: iid_batch(20, 0.05, size, stream(SEED, c))[0], 1_000_000, 3)
    rep = audit_local_stochastic(iid, 0.05)

    def composed(size, c):
        _, xa, za = iid_batch(20, 0.01, size, stream(SEED + 1, 2 * c))
        _, xb, zb = iid_batch(20, 0.02, size, stream(SEED + 1, 2 * c + 1))
        return compose_batches(xa, za, xb, zb)[0]
    comp = audit_local_stochastic(streamed_counts(composed, 1_000_000, 3), 0.03)
    ok = rep.passed and comp.passed and rep.checked == 20 + 190 + 1140
    elapsed = time.time() - t0
    acceptance(3, ok and elapsed < 120, f"iid(0.05) {rep.checked} sets ok={rep.passed}, composed(0.03) ok={comp.passed}, "
                                        f"{elapsed:.0f}s")
    assert ok and elapsed < 120


# 4 -----------------------------------------------------------------------------------------------


def test_criterion_4_toric_exhaustive(acceptance):
    t0 = time.time()
    n3, fail3 = exhaustive_correction(3, 1)
    n5, fail5 = exhaustive_correction(5, 2)
    elapsed = time.time() - t0
    # counts include the identity error
    ok = n3 == 1 + 18 * 3 and not fail3 and not fail5 and n5 == 1 + 50 * 3 + math.comb(50, 2) * 9
    acceptance(4, ok and elapsed < 120, f"L=3 {n3} weight<=1, L=5 {n5} weight<=2 errors, {len(fail3) + len(fail5)} failures, "
                                        f"{elapsed:.0f}s")
    assert ok and elapsed < 120


# 5 -----------------------------------------------------------------------------------------------


def test_criterion_5_communication_bound(acceptance):
    ests, lines, ok = [], [], True
    for L in (5, 7):
        cfg = CommExperimentConfig(L, 1e-3, 1e-3, 100_000, SEED, "iid", 0.0)
        assert cfg.alpha_eff == pytest.approx(3e-3)
        est = estimate_logical_failure(cfg, threads=4)
        ests.append(est)
        zeta = bound_zeta(L, cfg.alpha_eff, strict=False)
        live = zeta < 1
        ok &= not live or est.ci[1] <= zeta
        lines.append(f"L={L} rate {est.rate:.1e} (CI hi {est.ci[1]:.1e}) zeta {zeta:.2f}{'' if live else ' (vacuous)'}")
    mono = monotone_within_ci(ests)
    ok &= mono
    acceptance(5, ok, "; ".join(lines) + f"; nonincreasing in L: {mono}")
    assert ok


def test_criterion_5_nonvacuous_regime(acceptance):
    # supplementary: at alpha = 1e-3 the L = 7 bound is below one, so the comparison has content
    cfg = CommExperimentConfig(7, 5e-4, 2.5e-4, 100_000, SEED, "iid", 0.0)
    zeta = bound_zeta(7, cfg.alpha_eff)
    est = estimate_logical_failure(cfg, threads=4)
    ok = zeta < 1 and est.ci[1] <= zeta
    acceptance(5, ok, f"supplementary alpha=1e-3 L=7: CI hi {est.ci[1]:.1e} <= zeta {zeta:.3f}")
    assert ok


# 6 -----------------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def d5():
    return load_code("surface_d5")


@pytest.mark.parametrize("gate", ["I", "X", "CNOT", "prep_0", "measure_Z"])
def test_criterion_6_rec_correctness(d5, gate, acceptance):
    rec = build_rec(gate, d5)
    rep = sweep_single_faults(rec)
    ok = rep.pass_rate == 1.0 and rep.max_rounds <= 9 and rep.capped == 0 and rep.total_paths > 0
    acceptance(6, ok, f"{gate}: {rep.correct_given_good}/{rep.total_paths} paths, max EC rounds {rep.max_rounds}")
    assert ok, rep.witnesses[:3]


def test_criterion_6_rounds_under_random_noise(d5, acceptance):
    # about one fault per EC pass; at much higher rates the cap is what stops nearly every shot
    rep = monte_carlo_rec(build_rec("I", d5), 1e-4, 3000, seed=SEED)
    ok = rep.max_rounds <= 9
    acceptance(6, ok, f"monte-carlo delta=1e-4: max EC rounds {rep.max_rounds}, {rep.capped}/3000 shots reached the cap")
    assert ok


# 7 -----------------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def interface_report(d5):
    return sweep_interface_faults(build_round_trip(d5))


def test_criterion_7_noiseless_identity_and_encoded_faults(interface_report, acceptance):
    r = interface_report
    assert r.noiseless_identity
    assert r.failing_encoded == 0 and r.failing_paths == r.failing_level0
    # the literal criterion is judged in the xfail test below; this records the verdict with its analysis
    acceptance(7, r.all_pass, f"noiseless identity {r.noiseless_identity}; {r.failing_paths}/{r.total_paths} single-fault "
                              f"paths fail, all {r.failing_level0} on unencoded level-0 wires "
                              f"({', '.join(f'{k} {v}' for k, v in sorted(r.failing_by_tag.items()))}); "
                              f"0 failures from encoded locations")


@pytest.mark.xfail(strict=True, reason="a fault on the bare input or output qubit cannot be corrected by any code")
def test_criterion_7_literal_every_single_fault(interface_report):
    assert interface_report.all_pass


# 8 -----------------------------------------------------------------------------------------------


def test_criterion_8_teleportation(acceptance):
    t0 = time.time()
    code = load_code("toric_L3")
    gates = gate_set("clifford", 2)
    out = {}
    for i, (name, u) in enumerate(sorted(gates.items())):
        out[name] = verify_logical_action(AncillaSpec(code, u), 2, stream(SEED, i))
    ok = all(r.passed for r in out.values())
    elapsed = time.time() - t0
    runs = sum(r.runs for r in out.values())
    acceptance(8, ok and elapsed < 300, f"{len(out)} gates (I, Paulis, CNOTs, H, S) x all basis inputs x 16 branches, "
                                        f"{runs} runs, {elapsed:.0f}s")
    assert ok and elapsed < 300


# 9 -----------------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def survival_curves():
    code = load_code("toric_L3")
    return {d: memory_experiment(code, d, 10, 10_000, SEED) for d in (2.5e-3, 5e-3, 1e-2)}


def test_criterion_9_planted_weight_one(acceptance):
    code = load_code("toric_L3")
    dec = lookup_minweight_decoder(code)
    sc = build_syndrome_extraction(code)
    rng = stream(SEED, 0)
    means = []
    for e in weight_at_most(code.n, 1):
        if e.weight():
            _, st = run_ec_round(Frame.planted(e, 1000), 5e-3, dec, rng, sc)
            means.append(st.reduced_after.mean())
    worst = max(means)
    acceptance(9, worst <= 1.0, f"planted weight-1: mean post-round reduced weight {np.mean(means):.3f}, worst {worst:.3f}")
    assert worst <= 1.0


def test_criterion_9_monotone_in_delta(survival_curves, acceptance):
    c = [survival_curves[d] for d in sorted(survival_curves)]
    ok = all(a.ci[-1][1] >= b.ci[-1][0] and a.survival[-1] >= b.survival[-1] for a, b in zip(c, c[1:]))
    acceptance(9, ok, "survival after 10 rounds " + ", ".join(f"{x.delta:g}: {x.survival[-1]:.3f}" for x in c))
    assert ok


def test_criterion_9_survival_recorded(survival_curves, acceptance):
    s = survival_curves[5e-3]
    lo, hi = s.ci[-1]
    acceptance(9, s.survival[-1] >= 0.95,
               f"delta=5e-3 survival {s.survival[-1]:.4f} (CI {lo:.3f}-{hi:.3f}) vs 0.95; first round {s.survival[0]:.4f}; "
               f"the 2D toric code at L=3 is not single-shot, so residual errors accumulate across rounds")


@pytest.mark.xfail(strict=True, reason="L=3 toric code with single noisy syndrome rounds loses ~3% per round at 5e-3")
def test_criterion_9_literal_survival(survival_curves):
    assert survival_curves[5e-3].survival[-1] >= 0.95


# 10 ----------------------------------------------------------------------------------------------


RUNS = [
    ["rep-check", "--code", "bitflip3"],
    ["noise-bounds"],
    ["toric-comm", "--L", "3,5", "--trials", "2000", "--threads", "2"],
    ["rec-sim", "--code", "bitflip3", "--gate", "CNOT", "--sweep", "monte-carlo", "--trials", "500", "--delta", "0.01"],
    ["rec-sim", "--code", "bitflip3", "--gate", "X"],
    ["teleport-verify", "--code", "bitflip3", "--gate-set", "paulis", "--trials", "1"],
    ["single-shot", "--rounds", "3", "--trials", "1000"],
]


def test_criterion_10_determinism(tmp_path, acceptance):
    same = 0
    files = 0
    for i, args in enumerate(RUNS):
        outs = []
        for rep in (0, 1):
            d = tmp_path / f"{i}_{rep}"
            code = main(args + ["--out", str(d), "--seed", str(SEED)])
            assert code in (0, 1)
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        assert set(outs[0]) == set(outs[1])
        files += len(outs[0])
        same += sum(outs[0][k] == outs[1][k] for k in outs[0])
        for name, blob in outs[0].items():
            if name.endswith(".json"):
                assert json.loads(blob)["config"]["seed"] == SEED
    ok = same == files
    acceptance(10, ok, f"{same}/{files} CSV/JSON files byte-identical across reruns of {len(RUNS)} runs")
    assert ok
