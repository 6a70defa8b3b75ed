"""Where operators sit relative to a phase generator.

Every Pauli string anticommutes with ``k`` of the single-site ``Z`` terms.
The script builds a small Lie closure, tabulates its class histogram, and
shows that a scrambled ``Z`` spreads its weight like a binomial.
"""
from math import comb

from orbitmetro.orbits import census_tail, concentration_bound, dla_closure, full_class_census
from orbitmetro.pauli import PauliString
from orbitmetro.protocols import scrambled_class_weights

if __name__ == "__main__":
    n = 4
    gens = [PauliString.from_str(s) for s in ("XXII", "IXXI", "IIXX", "ZIII", "IZII", "IIZI", "IIIZ")]
    dla = dla_closure(gens)
    print(f"closure dimension {dla.dimension}, class counts {dla.class_histogram.weights.astype(int).tolist()}")

    print("\nfull census, n=10:", full_class_census(10).weights.astype(int).tolist())
    for eps in (0.1, 0.25, 0.4):
        print(f"  eps={eps}: tail {census_tail(10, eps):.4f}  bound {concentration_bound(10, eps):.4f}")

    n = 6
    hist = scrambled_class_weights(n, samples=40, seed=1)
    print(f"\nscrambled Z on {n} qubits")
    for k, w in enumerate(hist.weights):
        print(f"  k={k}: {w:.3f}  binomial {comb(n, k) / 2**n:.3f}")
