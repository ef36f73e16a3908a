#!/usr/bin/env python3
"""Regenerate the qubit Hamiltonian fixtures under data/hamiltonians/.

Pipeline per molecule: RHF/STO-3G with pyscf, optional frozen core and active
space, second-quantized Hamiltonian in spin-orbital block order (all alpha,
then all beta), parity encoding, removal of the two parity qubits that carry
N_alpha mod 2 and N mod 2, and a Pauli decomposition of the reduced matrix.
The nuclear repulsion and frozen-core energy are folded into the identity
term so that eigenvalues are total energies in Hartree.

Conventions match the Rust crate: letter i of a Pauli string acts on qubit i,
and qubit i is bit i of a computational basis index.

Usage: python3 scripts/gen_hamiltonians.py [outdir]
"""

import itertools
import os
import sys

import numpy as np
import pyscf
from pyscf import ao2mo, fci, gto, scf

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def annihilate(state, j):
    if not (state >> j) & 1:
        return None, 0
    sign = -1 if bin(state & ((1 << j) - 1)).count("1") % 2 else 1
    return state ^ (1 << j), sign


def create(state, j):
    if (state >> j) & 1:
        return None, 0
    sign = -1 if bin(state & ((1 << j) - 1)).count("1") % 2 else 1
    return state | (1 << j), sign


def apply_string(state, ops):
    """ops applied right-to-left: list of (kind, mode), kind in {'c','a'}."""
    sign = 1
    for kind, mode in reversed(ops):
        state, s = (create if kind == "c" else annihilate)(state, mode)
        if state is None:
            return None, 0
        sign *= s
    return state, sign


def fock_matrix(e_const, h1, eri):
    """Dense Fock-space matrix; h1/eri over k spatial orbitals, chemist notation."""
    k = h1.shape[0]
    n = 2 * k
    dim = 1 << n
    H = np.zeros((dim, dim))
    H += e_const * np.eye(dim)

    def so(p, spin):
        return p + spin * k

    one = []
    for p, q in itertools.product(range(k), repeat=2):
        if abs(h1[p, q]) > 1e-14:
            for s in (0, 1):
                one.append((h1[p, q], [("c", so(p, s)), ("a", so(q, s))]))
    two = []
    for p, q, r, s_ in itertools.product(range(k), repeat=4):
        v = eri[p, q, r, s_]
        if abs(v) < 1e-14:
            continue
        for sig, tau in itertools.product((0, 1), repeat=2):
            ops = [("c", so(p, sig)), ("c", so(r, tau)), ("a", so(s_, tau)), ("a", so(q, sig))]
            two.append((0.5 * v, ops))
    for coeff, ops in one + two:
        for b in range(dim):
            out, sign = apply_string(b, ops)
            if out is not None:
                H[out, b] += coeff * sign
    return H


def parity_permutation(n):
    perm = np.zeros(1 << n, dtype=int)
    for b in range(1 << n):
        acc = 0
        p = 0
        for j in range(n):
            acc ^= (b >> j) & 1
            p |= acc << j
        perm[b] = p
    return perm


def taper(Hp, n, n_alpha, n_beta):
    k = n // 2
    fixed = {k - 1: n_alpha % 2, n - 1: (n_alpha + n_beta) % 2}
    keep = [q for q in range(n) if q not in fixed]
    idx = []
    for r in range(1 << len(keep)):
        b = 0
        for i, q in enumerate(keep):
            b |= ((r >> i) & 1) << q
        for q, v in fixed.items():
            b |= v << q
        idx.append(b)
    idx = np.array(idx)
    return Hp[np.ix_(idx, idx)], keep, fixed


def pauli_matrix(label):
    # letter i acts on qubit i == bit i; kron puts its first factor on the highest bit
    m = np.array([[1.0 + 0j]])
    for ch in reversed(label):
        m = np.kron(m, PAULI[ch])
    return m


def decompose(H, m):
    terms = []
    for letters in itertools.product("IXYZ", repeat=m):
        label = "".join(letters)
        c = np.trace(pauli_matrix(label) @ H) / (1 << m)
        assert abs(c.imag) < 1e-12, (label, c)
        if abs(c.real) > 1e-12:
            terms.append((c.real, label))
    recon = sum(c * pauli_matrix(l) for c, l in terms)
    assert np.allclose(recon, H, atol=1e-11)
    return terms


def build(name, molecule, atom, charge, bond, frozen, active, out):
    mol = gto.M(atom=atom, basis="sto-3g", charge=charge, spin=0, unit="Angstrom", verbose=0)
    mf = scf.RHF(mol).run()
    C = mf.mo_coeff
    norb = C.shape[1]
    hcore = C.T @ mf.get_hcore() @ C
    eri = ao2mo.restore(1, ao2mo.full(mol, C), norb)
    e_const = mol.energy_nuc()
    for i in frozen:
        e_const += 2 * hcore[i, i]
        for j in frozen:
            e_const += 2 * eri[i, i, j, j] - eri[i, j, j, i]
    h_eff = hcore.copy()
    for i in frozen:
        h_eff += 2 * eri[:, :, i, i] - eri[:, i, i, :]
    act = list(active)
    h1 = h_eff[np.ix_(act, act)]
    g = eri[np.ix_(act, act, act, act)]
    n_elec = mol.nelectron - 2 * len(frozen)
    na = nb = n_elec // 2
    k = len(act)
    n = 2 * k

    H = fock_matrix(e_const, h1, g)
    perm = parity_permutation(n)
    Hp = np.zeros_like(H)
    Hp[np.ix_(perm, perm)] = H
    Hred, keep, fixed = taper(Hp, n, na, nb)
    m = len(keep)
    terms = decompose(Hred, m)

    e_red = np.linalg.eigvalsh(Hred)[0]
    e_fci = fci.direct_spin1.kernel(h1, g, k, (na, nb), ecore=e_const)[0]

    occ = sum(1 << p for p in range(na)) | sum(1 << (p + k) for p in range(nb))
    hf_full = perm[occ]
    hf_red = sum(((hf_full >> q) & 1) << i for i, q in enumerate(keep))

    terms.sort(key=lambda t: t[1])
    path = os.path.join(out, f"{name}.toml")
    with open(path, "w") as f:
        f.write(f'molecule = "{molecule}"\n')
        f.write(f"bond_length_angstrom = {bond!r}\n")
        f.write(f"n_qubits = {m}\n")
        src = (
            f"pyscf {pyscf.__version__} RHF/STO-3G"
            f"{', frozen core ' + str(list(frozen)) if frozen else ''}"
            f", active orbitals {act}, parity mapping with two-qubit reduction,"
            f" nuclear repulsion in identity term; scripts/gen_hamiltonians.py"
        )
        f.write(f'source = "{src}"\n')
        f.write("terms = [\n")
        for c, label in terms:
            f.write(f'    [{c:.16e}, "{label}"],\n')
        f.write("]\n")
    print(f"{path}: {len(terms)} terms, {m} qubits, E_red={e_red:.12f} E_fci={e_fci:.12f} "
          f"E_hf={mf.e_tot:.12f} hf_index={hf_red}")


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "data/hamiltonians"
    os.makedirs(out, exist_ok=True)
    for r in (0.75, 1.2, 1.6, 1.75, 2.0, 2.4):
        build(f"H2_{r:.2f}", "H2", f"H 0 0 0; H 0 0 {r}", 0, r, [], [0, 1], out)
    build("HeHplus_1.00", "HeH+", "He 0 0 0; H 0 0 1.0", 1, 1.0, [], [0, 1], out)
    # LiH: freeze Li 1s, drop the two pi orbitals (3, 4) that do not mix with sigma
    build("LiH_1.45", "LiH", "Li 0 0 0; H 0 0 1.45", 0, 1.45, [0], [1, 2, 5], out)
    # BeH2 (linear): freeze Be 1s, keep the two occupied valence sigma orbitals
    # and the two lowest sigma* virtuals
    build("BeH2_1.50", "BeH2", "H 0 0 -1.5; Be 0 0 0; H 0 0 1.5", 0, 1.5, [0], [1, 2, 5, 6], out)


if __name__ == "__main__":
    main()
