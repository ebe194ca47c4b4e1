# %% [markdown]
# # One factor is a rotation
#
# A factor exp(theta (A - A^+)) mixes each determinant it can excite with its
# partner and leaves every other determinant alone.  Norm is preserved and
# angles add.

# %%
import numpy as np

from sparse_ucc import (
    Determinant,
    ExcitationOperator,
    UccFactor,
    apply_factor,
    from_reference,
    hartree_fock_reference,
    norm,
)

ref = hartree_fock_reference(4, 2, 2)
op = ExcitationOperator.double(2, 3, 4, 5)  # alpha-beta pair HOMO -> LUMO
wf = apply_factor(from_reference(ref), UccFactor(op, 0.4, 0))
for det, c in wf.items():
    print(det.render(4), f"{c:+.6f}")
print("norm:", norm(wf))

# %% [markdown]
# Applying 0.4 and then 0.3 gives the same state as applying 0.7 once.

# %%
step = apply_factor(wf, UccFactor(op, 0.3, 0))
once = apply_factor(from_reference(ref), UccFactor(op, 0.7, 0))
print(max(abs(step.get(d) - once.get(d)) for d in set(step) | set(once)))

# %% [markdown]
# A determinant the operator cannot touch stays put.

# %%
idle = from_reference(Determinant(0b0011, 0b0101))
print(apply_factor(idle, UccFactor(op, 0.4, 0)).to_dict())
