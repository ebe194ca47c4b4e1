# %% [markdown]
# # Integrals, reference determinant and MP2 starting point
#
# Everything starts from an FCIDUMP file.  We read the LiH/STO-3G integrals,
# build the aufbau reference, and look at the operator pool together with the
# MP2 amplitudes that seed the optimization.

# %%
from pathlib import Path

import numpy as np

from sparse_ucc import UccsdProblem, fci_ground_energy, read_fcidump

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"
store = read_fcidump(DATA / "lih.fcidump")
print(f"{store.n_orbitals} orbitals, {store.n_electrons} electrons, core energy {store.core_energy:.6f}")

# %% [markdown]
# `UccsdProblem` bundles the reference, the Fock-diagonal orbital energies,
# the pool (all singles, then all doubles) and the MP2 amplitudes.

# %%
problem = UccsdProblem.from_store(store)
print("reference:", problem.reference.render(store.n_orbitals))
print("orbital energies (alpha):", np.round(problem.eps.eps[0::2], 4))
n_doubles = sum(op.is_double for op in problem.pool)
print(f"pool: {len(problem.pool) - n_doubles} singles, {n_doubles} doubles")

# %%
e_hf = problem.hf_energy
e_fci = fci_ground_energy(store, store.n_alpha, store.n_beta)
print(f"HF  {e_hf:.10f}")
print(f"MP2 correlation {problem.mp2.energy * 1e3:.4f} mHa")
print(f"FCI correlation {(e_fci - e_hf) * 1e3:.4f} mHa")

# %% [markdown]
# The ansatz orders doubles by decreasing |MP2 amplitude|; singles follow at
# zero.  Here are the five largest doubles.

# %%
ansatz = problem.ansatz()
for f in ansatz.factors[:5]:
    print(f"{str(f.op):>12}  theta0 = {f.theta:+.5f}")
