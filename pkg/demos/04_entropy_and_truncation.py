# %% [markdown]
# # How many determinants does the ansatz need?
#
# NH3/STO-3G has 315 pool operators.  After optimization the final state is
# dominated by a handful of determinants: its Shannon entropy stays small.
# The adjoint gradient keeps this demo to a few seconds.

# %%
from pathlib import Path

import numpy as np

from sparse_ucc import AnsatzObjective, OptimizerSettings, TruncationPolicy, UccsdProblem, entropy_trace, minimize, read_fcidump
from sparse_ucc.wavefunction import truncate

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"
store = read_fcidump(DATA / "nh3.fcidump")
problem = UccsdProblem.from_store(store)
ansatz = problem.ansatz()
ctx = AnsatzObjective(store, problem.reference, ansatz)
result = minimize(ansatz.thetas, ctx, OptimizerSettings(gradient="adjoint"))
optimized = ansatz.with_thetas(result.theta)

# %%
trace = entropy_trace(problem.reference, optimized)
s = trace.column("entropy")
n = trace.column("n_det")
for k in (0, 9, 49, 99, len(s) - 1):
    print(f"after factor {k + 1:4d}: entropy {s[k]:.4f}, {n[k]} determinants")

# %% [markdown]
# Truncation keeps the largest amplitudes once the count passes N_MAX.  The
# final state loses little weight when cut to its top 50 determinants.

# %%
state = ctx.state(result.theta)
kept = truncate(state, TruncationPolicy(50, 50))
overlap = sum(kept.get(d) * c for d, c in state.items())
print(f"{state.n_det} -> {kept.n_det} determinants, overlap {overlap:.6f}")
print("largest |c|:", np.round(np.sort(np.abs(state.amps))[::-1][:5], 4))
