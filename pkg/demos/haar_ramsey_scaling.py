"""Sensitivity of Haar-scrambled probes as the register grows.

Draws random probes from the full unitary group and from the permutation
symmetric sector, estimates the mean quantum Fisher information against the
collective ``Z`` generator, and fits the log-log slope.  Both the exact finite-dimension average and its
leading-order approximation are shown.
"""
from orbitmetro.protocols import ProtocolConfig, haar_ramsey_mc
from orbitmetro.qfi import analytic_haar_avg
from orbitmetro.sweep import SweepRow, fit_scaling


def table(ensemble, ns, samples):
    rows = []
    print(f"\n{ensemble}")
    print(f"{'n':>4} {'mean':>10} {'se':>8} {'exact':>10} {'leading':>10}")
    for n in ns:
        cfg = ProtocolConfig(n, ensemble, samples=samples, master_seed=n)
        res = haar_ramsey_mc(cfg)
        st = res.qfi_stats
        exact = analytic_haar_avg(cfg.ensemble, exact=True)
        lead = res.metadata["analytic_oracle"]
        print(f"{n:>4} {st.mean:10.3f} {st.std_error:8.3f} {exact:10.3f} {lead:10.3f}")
        rows.append(SweepRow("haar_ramsey", n, {}, st.mean, st.std_error, None, samples, n))
    slope, err = fit_scaling(rows)
    print(f"slope {slope:.3f} +/- {err:.3f}")


if __name__ == "__main__":
    table("full", [3, 4, 5, 6, 7, 8], 300)
    table("symmetric", [20, 40, 80, 160], 300)
