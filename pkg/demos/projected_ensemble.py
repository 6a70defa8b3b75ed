"""Measuring part of a scrambled register.

Reading out ``n_e`` qubits of a Haar-random state leaves the rest in one of
``2^n_e`` conditional states.  The probability-weighted sensitivity of those
states is compared with the unmeasured probe.
"""
from orbitmetro.protocols import ProtocolConfig, projected_ensemble_protocol

if __name__ == "__main__":
    n = 8
    print(f"n={n}")
    print(f"{'n_e':>4} {'weighted':>10} {'unweighted':>11} {'max excl':>10}")
    for ne in range(0, 5):
        res = projected_ensemble_protocol(ProtocolConfig(n, n_e=ne, samples=100, master_seed=3))
        md = res.metadata
        print(f"{ne:>4} {res.qfi_stats.mean:10.3f} {md['unweighted_mean']:11.3f} {max(md['excluded_mass']):10.2e}")
