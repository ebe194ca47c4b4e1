# %% [markdown]
# # Budget studies on BeH2
#
# Two experiments with a fixed survivor budget N_CUT = 20 (N_MAX = 30):
#
# * add doubles to the ansatz and watch the optimized energy stop improving
#   once their number passes N_CUT;
# * take parameters optimized under the budget and replay them with larger
#   budgets, without reoptimizing.

# %%
from pathlib import Path

from sparse_ucc import AnsatzObjective, OptimizerSettings, TruncationPolicy, UccsdProblem, md_convergence_sweep, minimize, read_fcidump, replay_vs_ncut

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"
store = read_fcidump(DATA / "beh2.fcidump")
problem = UccsdProblem.from_store(store)
policy = TruncationPolicy(20, 30)

sweep = md_convergence_sweep(problem, [0, 5, 10, 20, 30, 60], policy)
for p in sweep.points:
    print(f"M_D = {p['x']:3d}: correlation {p['correlation_energy'] * 1e3:9.4f} mHa")

# %%
ansatz = problem.ansatz()
ctx = AnsatzObjective(store, problem.reference, ansatz, policy)
result = minimize(ansatz.thetas, ctx, OptimizerSettings())
print(f"optimized under N_CUT = 20: {(result.energy - problem.hf_energy) * 1e3:.4f} mHa")

replay = replay_vs_ncut(problem.reference, ansatz.with_thetas(result.theta), [10, 20, 40, 80, 400], store)
print(replay.to_csv())
