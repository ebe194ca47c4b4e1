"""Regenerate the committed molecular fixtures under tests/data/.

Requires pyscf, which is NOT a runtime dependency of the package; the
fixtures are generated once and committed.  Run from the repository root:

    python tools/make_fixtures.py
    python tools/make_fixtures.py --large nh3_ccpcvdz.fcidump   # benchmark input

Each molecule yields ``<name>.fcidump`` plus an entry in ``manifest.json``
with reference values computed by pyscf (RHF, MP2, CCSD, CCSD(T), FCI).
"""

from __future__ import annotations

import argparse
import json
from math import comb
from pathlib import Path

import numpy as np
from pyscf import ao2mo, cc, fci, gto, mp, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parents[1] / "tests" / "data"

# Experimental geometries (angstrom).
_NH3_R, _NH3_ANG = 1.012, np.deg2rad(106.67)


def _nh3_geometry() -> str:
    # place three H on a cone around z with the given H-N-H angle
    cos_t = (np.cos(_NH3_ANG) + 0.5) / 1.5  # cos of angle between N-H and the -z axis
    theta = np.arccos(np.sqrt(max(cos_t, 0.0)))
    atoms = ["N 0 0 0"]
    for k in range(3):
        phi = 2 * np.pi * k / 3
        x = _NH3_R * np.sin(theta) * np.cos(phi)
        y = _NH3_R * np.sin(theta) * np.sin(phi)
        z = -_NH3_R * np.cos(theta)
        atoms.append(f"H {x:.10f} {y:.10f} {z:.10f}")
    return "; ".join(atoms)


def _ch2o_geometry() -> str:
    r_co, r_ch, hch = 1.205, 1.111, np.deg2rad(116.1)
    half = hch / 2
    return (
        f"C 0 0 0; O 0 0 {r_co}; "
        f"H 0 {r_ch * np.sin(half):.10f} {-r_ch * np.cos(half):.10f}; "
        f"H 0 {-r_ch * np.sin(half):.10f} {-r_ch * np.cos(half):.10f}"
    )


MOLECULES = {
    "h2": "H 0 0 0; H 0 0 0.7414",
    "lih": "Li 0 0 0; H 0 0 1.5949",
    "beh2": "Be 0 0 0; H 0 0 1.3264; H 0 0 -1.3264",
    "nh3": _nh3_geometry(),
    "ch2o": _ch2o_geometry(),
}


def _ccsd_params(mycc: cc.ccsd.CCSD, nocc: int) -> list[dict]:
    """CCSD amplitudes as an ordered parameter list (spin-orbital, s = 2p + sigma)."""
    t1 = cc.addons.spatial2spin(mycc.t1)
    t2 = cc.addons.spatial2spin(mycc.t2)
    nso_occ = 2 * nocc
    nso_vir = t1.shape[1]
    entries = []
    for i in range(nso_occ):
        for a in range(nso_vir):
            if (i % 2) != (a % 2):
                continue
            entries.append({"kind": "single", "i": i, "a": nso_occ + a, "theta": float(t1[i, a])})
    for i in range(nso_occ):
        for j in range(i + 1, nso_occ):
            for a in range(nso_vir):
                for b in range(a + 1, nso_vir):
                    if (i % 2) + (j % 2) != (a % 2) + (b % 2):
                        continue
                    entries.append(
                        {
                            "kind": "double",
                            "i": i,
                            "j": j,
                            "a": nso_occ + a,
                            "b": nso_occ + b,
                            "theta": float(t2[i, j, a, b]),
                        }
                    )
    return entries


def write_large(path: Path, n_keep: int = 32) -> None:
    """All-electron NH3/cc-pCVDZ with the highest virtual orbitals dropped."""
    # cc-pCVDZ has no hydrogen entry; cc-pVDZ is the matching H basis
    mol = gto.M(atom=MOLECULES["nh3"], basis={"N": "cc-pcvdz", "H": "cc-pvdz"}, verbose=0)
    mf = scf.RHF(mol).run(conv_tol=1e-11)
    c = mf.mo_coeff[:, :n_keep]
    h1 = c.T @ mf.get_hcore() @ c
    eri = ao2mo.kernel(mol, c)
    fcidump.from_integrals(str(path), h1, eri, n_keep, mol.nelectron, nuc=mol.energy_nuc(), tol=1e-12)
    print(f"wrote {path}: {n_keep} of {mf.mo_coeff.shape[1]} orbitals, HF {mf.e_tot:.10f}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--large", type=Path, help="write the windowed NH3/cc-pCVDZ FCIDUMP here and exit")
    args = parser.parse_args()
    if args.large is not None:
        write_large(args.large)
        return
    OUT.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for name, atom in MOLECULES.items():
        mol = gto.M(atom=atom, basis="sto-3g", verbose=0)
        mf = scf.RHF(mol).run(conv_tol=1e-13, conv_tol_grad=1e-10)
        fcidump.from_scf(mf, str(OUT / f"{name}.fcidump"), tol=1e-15)
        norb = mf.mo_coeff.shape[1]
        nocc = mol.nelectron // 2
        pt = mp.MP2(mf).run()
        mycc = cc.CCSD(mf).run(conv_tol=1e-12, conv_tol_normt=1e-10)
        e_t = mycc.ccsd_t()
        h1 = mf.mo_coeff.T @ mf.get_hcore() @ mf.mo_coeff
        eri = ao2mo.restore(1, ao2mo.kernel(mol, mf.mo_coeff), norb)
        e_fci = None
        ndet = comb(norb, nocc) ** 2
        if ndet <= 300_000:
            e_fci, _ = fci.direct_spin1.kernel(
                h1, eri, norb, mol.nelectron, ecore=mol.energy_nuc(), conv_tol=1e-13
            )
            e_fci = float(e_fci)
        manifest[name] = {
            "geometry_angstrom": atom,
            "basis": "sto-3g",
            "n_orbitals": int(norb),
            "n_electrons": int(mol.nelectron),
            "n_determinants": int(ndet),
            "nuclear_repulsion": float(mol.energy_nuc()),
            "hf_energy": float(mf.e_tot),
            "mp2_correlation": float(pt.e_corr),
            "ccsd_energy": float(mycc.e_tot),
            "ccsd_t_energy": float(mycc.e_tot + e_t),
            "fci_energy": e_fci,
            "mo_energies": [float(e) for e in mf.mo_energy],
            "eri_1111": float(eri[0, 0, 0, 0]),
        }
        if name in ("h2", "nh3", "beh2"):
            with open(OUT / f"{name}_ccsd_params.json", "w") as fh:
                json.dump({"factors": _ccsd_params(mycc, nocc)}, fh, indent=1)
        print(name, manifest[name]["hf_energy"], e_fci)
    with open(OUT / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main()
