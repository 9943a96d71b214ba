#!/usr/bin/env python3
"""Generate the H2 and LiH qubit Hamiltonians and sweep plans under data/.

H2: STO-3G, symmetry-conserving Bravyi-Kitaev, 2 qubits.
LiH: STO-3G, frozen Li 1s, sigma active space (3 spatial orbitals),
symmetry-conserving Bravyi-Kitaev, 4 qubits.

Requires pyscf and openfermion.
"""

import json
import pathlib

import numpy as np
import openfermion as of
from openfermion.chem.molecular_data import spinorb_from_spatial
from openfermion.ops.representations import get_active_space_integrals
from pyscf import ao2mo, gto, scf

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"


def integrals(geometry):
    mol = gto.M(atom=geometry, basis="sto-3g", unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    c = mf.mo_coeff
    one = c.T @ mf.get_hcore() @ c
    n = c.shape[1]
    eri = ao2mo.restore(1, ao2mo.full(mol, c), n)
    # (ps|qr) ordering expected by spinorb_from_spatial.
    two = np.asarray(eri.transpose(0, 2, 3, 1), order="C")
    return mol.energy_nuc(), one, two, mol.nelectron


def qubit_hamiltonian(geometry, occupied=None, active=None):
    constant, one, two, electrons = integrals(geometry)
    if active is not None:
        core, one, two = get_active_space_integrals(one, two, occupied, active)
        constant += core
        electrons -= 2 * len(occupied)
    one_so, two_so = spinorb_from_spatial(one, two)
    op = of.InteractionOperator(constant, one_so, 0.5 * two_so)
    fermion = of.get_fermion_operator(op)
    modes = one_so.shape[0]
    qubit = of.symmetry_conserving_bravyi_kitaev(fermion, modes, electrons)
    qubit.compress(1e-12)
    return qubit, modes - 2


def write_sum(path, op, qubits, header):
    lines = [f"# {header}"]
    for term, coef in sorted(op.terms.items()):
        word = ["I"] * qubits
        for q, p in term:
            word[q] = p
        lines.append(f"{coef.real:.15g} {''.join(word)}")
    path.write_text("\n".join(lines) + "\n")


def sweep(name, distances, anchor, levels, build):
    out = ROOT / name
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for d in distances:
        op, qubits = build(d)
        fname = f"{name}_{d:.3f}.txt"
        write_sum(out / fname, op, qubits, f"{name} bond distance {d:.3f} Angstrom")
        files[f"{d:.3f}"] = fname
        spectrum = np.linalg.eigvalsh(of.get_sparse_operator(op, qubits).toarray())
        print(name, f"{d:.3f}", " ".join(f"{e:.6f}" for e in spectrum[:levels]))
    plan = {
        "bond_distances": [round(d, 3) for d in distances],
        "anchor_distance": anchor,
        "hamiltonian_files": files,
        "levels": levels,
    }
    (out / "plan.json").write_text(json.dumps(plan, indent=2) + "\n")


def main():
    sweep(
        "h2",
        [0.491 + 0.25 * i for i in range(7)],
        0.741,
        4,
        lambda d: qubit_hamiltonian(f"H 0 0 0; H 0 0 {d}"),
    )
    sweep(
        "lih",
        [0.7 + 0.2 * i for i in range(11)],
        1.5,
        7,
        lambda d: qubit_hamiltonian(f"Li 0 0 0; H 0 0 {d}", occupied=[0], active=[1, 2, 5]),
    )


if __name__ == "__main__":
    main()
