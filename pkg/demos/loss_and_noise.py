"""Two imperfections: losing qubits and depolarizing the probe."""
from math import sqrt

from orbitmetro.protocols import ProtocolConfig, loss_experiment, noisy_protocol
from orbitmetro.qfi import depolarize_factor

if __name__ == "__main__":
    n = 10
    a = sqrt(0.5)
    print(f"balanced superposition of |0..0> and a Dicke state, n={n}")
    for k in range(4):
        numeric, closed = loss_experiment(n, k, a, a, "before")
        print(f"  k={k}: QFI {numeric:8.4f}  closed form {closed:8.4f}")

    print("\ndepolarized Haar probes, n=5")
    for p in (0.0, 0.1, 0.3):
        res = noisy_protocol(ProtocolConfig(5, noise_p=p, samples=200, master_seed=2))
        ratio = res.qfi_stats.mean / res.reference.mean()
        worst = max(abs(r - depolarize_factor(p, 32)) for r in res.metadata["ratios"])
        print(f"  p={p}: mean {res.qfi_stats.mean:.3f}  ratio {ratio:.6f}  predicted {depolarize_factor(p, 32):.6f}"
              f"  worst instance deviation {worst:.1e}")
