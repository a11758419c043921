"""Regenerate the bundled FCIDUMP files and their provenance sidecars.

Requires pyscf, which is not a runtime dependency of the package:

    python3 tools/make_fcidumps.py [--with-h2o]

Each molecule is run through RHF; core orbitals are frozen where listed and
the active-space integrals are written in the canonical RHF orbital basis.
The sidecar records the RHF energy and the exact (CASCI/FCI) energy of the
same active space.
"""
import argparse
import json
from pathlib import Path

import numpy as np
from pyscf import ao2mo, gto, mcscf, scf

from qemkit.chemistry import MolecularIntegrals, write_fcidump

OUT = Path(__file__).resolve().parents[1] / "src" / "qemkit" / "data"


def _h2o_geometry(r=0.9572, angle=104.52):
    t = np.deg2rad(angle)
    return f"O 0 0 0; H {r} 0 0; H {r * np.cos(t)} {r * np.sin(t)} 0"


MOLECULES = {
    "h2_sto3g": dict(atom="H 0 0 0; H 0 0 0.7414", basis="sto-3g", ncore=0),
    "h4_sto3g": dict(atom="H 0 0 0; H 0 0 1.0; H 0 0 2.0; H 0 0 3.0", basis="sto-3g", ncore=0),
    "lih_sto3g": dict(atom="Li 0 0 0; H 0 0 1.5949", basis="sto-3g", ncore=0),
    "h2_ccpvdz": dict(atom="H 0 0 0; H 0 0 0.7414", basis="cc-pvdz", ncore=0),
    "lih_631g": dict(atom="Li 0 0 0; H 0 0 1.5949", basis="6-31g", ncore=1),
    "h2o_631g": dict(atom=_h2o_geometry(), basis="6-31g", ncore=1),
}


def build(name, atom, basis, ncore):
    mol = gto.M(atom=atom, basis=basis, unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    norb = mol.nao - ncore
    nelec = mol.nelectron - 2 * ncore
    cas = mcscf.CASCI(mf, norb, nelec)
    h1, ecore = cas.get_h1eff()
    g = ao2mo.restore(1, ao2mo.full(mol, mf.mo_coeff[:, ncore:ncore + norb]), norb)
    e_exact = float(cas.kernel()[0])
    m = MolecularIntegrals(norb, nelec, ecore, h1, g)
    write_fcidump(m, OUT / f"{name}.fcidump", tol=1e-14)
    meta = {
        "molecule": name.split("_")[0].upper(),
        "basis": basis,
        "geometry_angstrom": atom,
        "frozen_core_orbitals": ncore,
        "n_orbitals": norb,
        "n_electrons": nelec,
        "n_qubits": 2 * norb,
        "hf_energy": float(mf.e_tot),
        "fci_energy": e_exact,
        "generator": "pyscf " + __import__("pyscf").__version__,
    }
    (OUT / f"{name}.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"{name}: {2 * norb} qubits, HF {mf.e_tot:.10f}, exact {e_exact:.10f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--only", nargs="*")
    args = ap.parse_args()
    OUT.mkdir(parents=True, exist_ok=True)
    for name, spec in MOLECULES.items():
        if args.only and name not in args.only:
            continue
        build(name, **spec)


if __name__ == "__main__":
    main()
