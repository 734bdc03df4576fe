"""Regenerate the frozen reference fixtures used by the chem test suites.

Requires RDKit. The outputs are committed; tests never invoke Python.
"""

import os
import random
import sys

from rdkit import Chem, RDLogger, rdBase
from rdkit.Chem import Crippen, Descriptors, QED, rdMolDescriptors
from rdkit.Chem.EnumerateStereoisomers import EnumerateStereoisomers, StereoEnumerationOptions

RDLogger.DisableLog("rdApp.*")

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
OUT = os.path.join(ROOT, "crates", "chem", "tests", "fixtures")
NCI = os.path.join(os.path.dirname(Chem.__file__), "..", "Data", "NCI", "first_5K.smi")

ALPHABET = list("CNOSPFIcnos()[]=#-+123456%@/\\.Hl") + ["Cl", "Br", "[nH]", "[O-]", "[N+]"]
UNSUPPORTED = ("*", "$")


def load_corpus():
    out = []
    with open(NCI) as fh:
        for line in fh:
            smi = line.split()[0]
            if any(u in smi for u in UNSUPPORTED):
                continue
            mol = Chem.MolFromSmiles(smi)
            if mol is not None:
                out.append((smi, mol))
    return out


def mutate(rng, smi):
    s = list(smi)
    op = rng.choice(["delete", "insert", "substitute", "swap"])
    i = rng.randrange(len(s))
    if op == "delete":
        del s[i]
    elif op == "insert":
        s.insert(i, rng.choice(ALPHABET))
    elif op == "substitute":
        s[i] = rng.choice(ALPHABET)
    elif len(s) > 1:
        j = min(i + 1, len(s) - 1)
        s[i], s[j] = s[j], s[i]
    return "".join(s)


def validity(rng, corpus):
    picked = rng.sample(corpus, 1000)
    rows = []
    for k, (smi, mol) in enumerate(picked):
        # Half verbatim Kekulé input, half aromatic canonical output.
        text = smi if k % 2 == 0 else Chem.MolToSmiles(mol)
        rows.append((text, 1))
    mutated = set()
    sources = [r[0] for r in rows]
    while len(mutated) < 1000:
        m = mutate(rng, rng.choice(sources))
        if m and m not in mutated and not any(u in m for u in UNSUPPORTED):
            mutated.add(m)
    for m in sorted(mutated):
        rows.append((m, int(Chem.MolFromSmiles(m) is not None)))
    with open(os.path.join(OUT, "validity.tsv"), "w") as fh:
        fh.write("# smiles\treference_valid\n")
        for text, ok in rows:
            fh.write(f"{text}\t{ok}\n")


def stereo_corpus(rng, corpus):
    opts = StereoEnumerationOptions(onlyUnassigned=True, maxIsomers=4, rand=7)
    out = []
    pool = [c for c in corpus if 4 <= c[1].GetNumHeavyAtoms() <= 40]
    rng.shuffle(pool)
    for smi, mol in pool:
        if len(out) >= 100:
            break
        isomers = list(EnumerateStereoisomers(mol, options=opts))
        pick = isomers[-1] if isomers and len(out) % 2 == 0 else mol
        out.append(Chem.MolToSmiles(pick))
    small = [c for c in corpus if c[1].GetNumHeavyAtoms() <= 12]
    rng.shuffle(small)
    extra = []
    for smi, mol in small[:60]:
        isomers = list(EnumerateStereoisomers(mol, options=opts))
        extra.append(Chem.MolToSmiles(isomers[-1] if isomers else mol))
    with open(os.path.join(OUT, "canon_corpus.smi"), "w") as fh:
        for s in out:
            fh.write(s + "\n")
    with open(os.path.join(OUT, "canon_small.smi"), "w") as fh:
        for s in extra:
            fh.write(s + "\n")


STRICT_ROTB = Chem.MolFromSmarts(
    "[!$(*#*)&!D1&!$(C(F)(F)F)&!$(C(Cl)(Cl)Cl)&!$(C(Br)(Br)Br)&!$(C([CH3])([CH3])[CH3])"
    "&!$([CD3](=[N,O,S])-!@[#7,O,S!D1])&!$([#7,O,S!D1]-!@[CD3]=[N,O,S])"
    "&!$([CD3](=[N+])-!@[#7!D1])&!$([#7!D1]-!@[CD3]=[N+])]-,:;!@"
    "[!$(*#*)&!D1&!$(C(F)(F)F)&!$(C(Cl)(Cl)Cl)&!$(C(Br)(Br)Br)&!$(C([CH3])([CH3])[CH3])]"
)


def descriptors(rng, corpus):
    pool = [c for c in corpus if c[1].GetNumHeavyAtoms() >= 3]
    picked = rng.sample(pool, 200)
    with open(os.path.join(OUT, "descriptors.tsv"), "w") as fh:
        fh.write("# smiles\tmw\tlogp\ttpsa\thbd\thba\trotb\taro_rings\tfsp3\tqed\tmr\n")
        for smi, mol in picked:
            hbd = sum(1 for a in mol.GetAtoms() if a.GetAtomicNum() in (7, 8) and a.GetTotalNumHs() > 0)
            hba = sum(1 for a in mol.GetAtoms() if a.GetAtomicNum() in (7, 8))
            rotb = len(mol.GetSubstructMatches(STRICT_ROTB))
            vals = [
                Descriptors.MolWt(mol),
                Crippen.MolLogP(mol),
                rdMolDescriptors.CalcTPSA(mol, includeSandP=True),
                hbd,
                hba,
                rotb,
                rdMolDescriptors.CalcNumAromaticRings(mol),
                rdMolDescriptors.CalcFractionCSP3(mol),
                QED.qed(mol),
                Crippen.MolMR(mol),
            ]
            fh.write(smi + "\t" + "\t".join(f"{v:.6f}" if isinstance(v, float) else str(v) for v in vals) + "\n")


def main():
    rng = random.Random(20240607)
    corpus = load_corpus()
    print(f"rdkit {rdBase.rdkitVersion}, corpus {len(corpus)}", file=sys.stderr)
    validity(rng, corpus)
    stereo_corpus(rng, corpus)
    descriptors(rng, corpus)


if __name__ == "__main__":
    main()
