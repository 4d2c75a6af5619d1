"""Regenerates the test fixtures under crates/core/tests/fixtures.

Requires RDKit (``pip install rdkit``). RDKit is only used here, to build
and sanity-check the fixture data; the Rust crates do not depend on it.

Outputs:
  corpus.smi           drug-like molecules assembled from building blocks
  reactions.tsv        reactants<TAB>product<TAB>reaction type
  brics_reference.tsv  smiles<TAB>sorted dot-joined BRICS fragments
"""

import os
import random

from rdkit import Chem, RDLogger
from rdkit.Chem import AllChem, BRICS, Descriptors

RDLogger.DisableLog("rdApp.*")

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "fixtures")

ACIDS = """OC(=O)c1ccccc1 OC(=O)c1ccc(Cl)cc1 OC(=O)c1ccc(F)cc1 OC(=O)c1cccnc1 OC(=O)c1ccncc1
OC(=O)c1ccc(OC)cc1 OC(=O)c1cc(C)on1 OC(=O)c1ccsc1 OC(=O)c1ccco1 OC(=O)C1CCCCC1 OC(=O)C1CC1
OC(=O)Cc1ccccc1 OC(=O)CCc1ccccc1 OC(=O)c1ccc2ccccc2c1 OC(=O)c1cc2ccccc2[nH]1 OC(=O)c1ccc(Br)cc1
OC(=O)c1cccc(Br)c1 OC(=O)c1ccc(C(F)(F)F)cc1 OC(=O)c1cnc2ccccc2c1 OC(=O)C1CCN(C(=O)OC(C)(C)C)CC1
OC(=O)c1ccc(N2CCOCC2)cc1 OC(=O)c1n[nH]c2ccccc12 OC(=O)COc1ccccc1 OC(=O)c1cccc(C#N)c1
OC(=O)c1ccc(S(C)(=O)=O)cc1 OC(=O)C(C)(C)C OC(=O)c1csc(C)n1 OC(=O)c1ccc2OCOc2c1
OC(=O)c1ccnc(Cl)c1 OC(=O)CCC(=O)c1ccccc1 OC(=O)c1ccc(-c2ccccc2)cc1 OC(=O)C1CCOCC1
OC(=O)c1cn(C)nc1 OC(=O)c1ccc(O)cc1 OC(=O)c1ccc([N+](=O)[O-])cc1""".split()

AMINES = """NCc1ccccc1 NCCc1ccccc1 C1CCNCC1 C1COCCN1 CN1CCNCC1 Nc1ccccc1 Nc1ccc(F)cc1 Nc1ccc(Cl)cc1
Nc1cccnc1 Nc1ccncc1 NC1CCCCC1 NC1CC1 CNC NCc1ccco1 NCc1cccs1 NCc1ccncc1 Nc1ccc(OC)cc1
c1ccc(CN2CCNCC2)cc1 NC(C)c1ccccc1 Nc1nccs1 Nc1ccc2[nH]ccc2c1 NCCN1CCOCC1 NCCCN1CCOCC1
C1CCNC1 OC1CCNCC1 NCC(F)(F)F Nc1cc(C)on1 Nc1ccc(C(F)(F)F)cc1 NC1CCN(C)CC1 Nc1cnn(C)c1
N[C@@H](Cc1ccccc1)C(=O)OC NCc1ccc(Br)cc1 Nc1ccc(Br)cc1 NCCO NC1CCOCC1 COc1ccc(CN)cc1
Nc1ccc(N2CCOCC2)cc1 c1ccc(N2CCNCC2)cc1 NCc1ccc(S(N)(=O)=O)cc1""".split()

ARYL_BROMIDES = """Brc1ccccc1 Brc1ccc(F)cc1 Brc1cccnc1 Brc1ccncc1 Brc1ccc(C#N)cc1 Brc1ccc(OC)cc1
Brc1cccs1 Brc1ccc2ccccc2c1 Brc1cnc2ccccc2c1 Brc1ccc(C(=O)OC)cc1 Brc1cncnc1 Brc1ccc(N2CCOCC2)cc1
Brc1ccc(C(F)(F)F)cc1 Brc1ccc(Cl)cc1 Brc1ccc2c(c1)OCO2 Brc1cc(C)ccc1O Brc1ccc(S(C)(=O)=O)cc1
Brc1ccc(CN2CCCC2)cc1 Brc1cccc(C(=O)N)c1 Brc1cnn(C)c1 Brc1ccc2[nH]ccc2c1 Brc1ccc(C(C)=O)cc1
Brc1ccc(OC(F)(F)F)cc1 Brc1ccnc(N)c1 Brc1ccc(cc1)C(=O)O""".split()

BORONIC = """OB(O)c1ccccc1 OB(O)c1ccc(F)cc1 OB(O)c1cccnc1 OB(O)c1ccc(OC)cc1 OB(O)c1ccco1
OB(O)c1ccsc1 OB(O)c1ccc(C)cc1 OB(O)c1ccc(Cl)cc1 OB(O)c1cnn(C)c1 OB(O)c1ccc2ccccc2c1
OB(O)c1ccc(C(=O)O)cc1 OB(O)c1ccc(CO)cc1 OB(O)c1cccc(N)c1 OB(O)c1ccc(N(C)C)cc1
OB(O)c1ccc(C#N)cc1 OB(O)c1cc(F)cc(F)c1 OB(O)c1ccc2OCOc2c1 OB(O)c1ccc(S(C)(=O)=O)cc1
OB(O)c1cncnc1 OB(O)c1ccc(OC(F)(F)F)cc1""".split()

ALDEHYDES = """O=Cc1ccccc1 O=Cc1ccc(F)cc1 O=Cc1cccnc1 O=Cc1ccco1 O=Cc1cccs1 O=Cc1ccc(OC)cc1
O=CC1CCCCC1 O=Cc1ccc(Cl)cc1 O=Cc1ccc2ccccc2c1 O=Cc1cnc2ccccc2c1 O=Cc1ccc(N(C)C)cc1
O=Cc1c[nH]c2ccccc12 O=CCc1ccccc1 O=Cc1ccc(Br)cc1 O=Cc1ccnc(Cl)c1""".split()

SULFONYL = """ClS(=O)(=O)c1ccccc1 ClS(=O)(=O)c1ccc(C)cc1 ClS(=O)(=O)c1ccc(F)cc1 ClS(=O)(=O)C
ClS(=O)(=O)c1cccs1 ClS(=O)(=O)c1ccc(OC)cc1 ClS(=O)(=O)c1ccc(Cl)cc1 ClS(=O)(=O)c1cn(C)cn1
ClS(=O)(=O)c1ccc2ccccc2c1 ClS(=O)(=O)CC ClS(=O)(=O)c1ccc(Br)cc1 ClS(=O)(=O)c1cccc(C#N)c1""".split()

PHENOLS = """Oc1ccccc1 Oc1ccc(F)cc1 Oc1ccc(Cl)cc1 Oc1cccnc1 Oc1ccc(OC)cc1 Oc1ccc2ccccc2c1
Oc1ccc(C(=O)OC)cc1 Oc1ccc(Br)cc1 Oc1ccc(C#N)cc1 Oc1ccc(N2CCOCC2)cc1 OCc1ccccc1 OCCN1CCOCC1""".split()

ALKYL_BROMIDES = """BrCc1ccccc1 BrCc1ccc(F)cc1 BrCCc1ccccc1 BrCC1CC1 BrCc1ccccn1 BrCCCN1CCOCC1
BrCc1ccc(C#N)cc1 BrCCOC BrCc1cccs1 BrCc1ccc(Br)cc1 BrCC(=O)OCC BrCCCCl""".split()

ISOCYANATES = """O=C=Nc1ccccc1 O=C=Nc1ccc(Cl)cc1 O=C=Nc1ccc(F)cc1 O=C=NC1CCCCC1 O=C=Nc1ccc(OC)cc1
O=C=Nc1ccc(C(F)(F)F)cc1 O=C=NCc1ccccc1""".split()

ALCOHOLS = """OCC OCc1ccccc1 OCCN1CCOCC1 OC1CCCCC1 OCC(C)C OCCc1ccccc1 OC(C)C OCCOC""".split()

REACTIONS = {
    "amide coupling": ("[C:1](=[O:2])[OH].[N;!H0;!$(N-C=O);!$(N-S):3]>>[C:1](=[O:2])[N:3]", ACIDS, AMINES),
    "Suzuki coupling": ("[c:1][Br].[c:2]B(O)O>>[c:1]-[c:2]", ARYL_BROMIDES, BORONIC),
    "Buchwald-Hartwig amination": ("[c:1][Br].[N;!H0;!$(N-C=O);!$(N-S);!$(N-c):2]>>[c:1][N:2]", ARYL_BROMIDES, AMINES),
    "reductive amination": ("[CH1:1](=O).[N;!H0;!$(N-C=O);!$(N-S);!$(N-c):2]>>[CH2:1][N:2]", ALDEHYDES, AMINES),
    "sulfonamide formation": ("[S:1](=[O:2])(=[O:3])Cl.[N;!H0;!$(N-C=O);!$(N-S):4]>>[S:1](=[O:2])(=[O:3])[N:4]", SULFONYL, AMINES),
    "Williamson ether synthesis": ("[O;H1:1][#6:3].[CH2:2]Br>>[#6:3][O:1][CH2:2]", PHENOLS, ALKYL_BROMIDES),
    "urea formation": ("[N:1]=C=O.[N;!H0;!$(N-C=O);!$(N-S):2]>>[N:1]C(=O)[N:2]", ISOCYANATES, AMINES),
    "esterification": ("[C:1](=[O:2])[OH].[OH:3][CH2,CH1:4]>>[C:1](=[O:2])[O:3][*:4]", ACIDS, ALCOHOLS),
}

DRUGS = """CC(=O)Oc1ccccc1C(=O)O CC(C)Cc1ccc(C(C)C(=O)O)cc1 CC(=O)Nc1ccc(O)cc1
CN1C(=O)CN=C(c2ccccc2)c2cc(Cl)ccc21 CN(C)CCC=C1c2ccccc2CCc2ccccc21 Clc1ccc2c(c1)C(=NCC(=O)N2)c1ccccc1
COc1ccc2[nH]cc(CCNC(C)=O)c2c1 CN1CCC[C@H]1c1cccnc1 Cn1cnc2c1c(=O)n(C)c(=O)n2C
CC(C)NCC(O)COc1cccc2ccccc12 COc1ccc(CCN(C)CCCC(C#N)(c2ccc(OC)c(OC)c2)C(C)C)cc1OC
CCOC(=O)C1=C(COCCN)NC(C)=C(C(=O)OC)C1c1ccccc1Cl CN1CCN(CC1)C(=O)OC1N(C(=O)c2nccnc21)c1ccc(Cl)cn1
O=C(O)c1cn(C2CC2)c2cc(N3CCNCC3)c(F)cc2c1=O CC1=C(C(=O)OCC)C(c2cccc([N+](=O)[O-])c2)C(C(=O)OC)=C(C)N1
CS(=O)(=O)Nc1ccc(cc1)C(O)CNC(C)C Cc1ccc(cc1)S(=O)(=O)NC(=O)NN1CCCCCC1
CC(C)(C)NCC(O)c1ccc(O)c(CO)c1 NS(=O)(=O)c1cc(C(=O)O)c(NCc2ccco2)cc1Cl
CN1C(=O)N(C)c2ncn(C)c2C1=O CC(C)OC(=O)C(C)(C)Oc1ccc(cc1)C(=O)c1ccc(Cl)cc1
COc1cc2nc(nc(N)c2cc1OC)N1CCN(CC1)C(=O)c1ccco1 CCCc1nc(C)c2c(=O)[nH]c(nc2n1)-c1cc(ccc1OCC)S(=O)(=O)N1CCN(C)CC1
Cc1ncc([N+](=O)[O-])n1CCO OC(=O)CC1(CC(O)=O)CCCCC1 NCC1(CC(O)=O)CCCCC1
CC(=O)OCC(=O)C12OC(C)(C)OC1CC1C3CCC4=CC(=O)C=CC4(C)C3(F)C(O)CC12C
CN(C)C(=N)NC(N)=N COc1ccc2cc(ccc2c1)C(C)C(O)=O Clc1ccccc1CN1CCc2sccc2C1
CCN(CC)CC(=O)Nc1c(C)cccc1C Oc1ccc(cc1)C(=O)c1ccc(O)cc1 CC(C)C(=O)Nc1ccc(cc1)[N+](=O)[O-]
O=C1CCc2cc(OCCCCN3CCN(CC3)c3cccc(Cl)c3Cl)ccc2N1 Fc1ccc(cc1)C(=O)CCCN1CCC(O)(CC1)c1ccc(Cl)cc1
CNCCC(Oc1ccc(cc1)C(F)(F)F)c1ccccc1 CN1CCC(CC1)=C1c2ccccc2C=Cc2ccccc12
Cc1c(cccc1[N+](=O)[O-])C(=O)Nc1ccccc1 COc1ccccc1N1CCN(CCCNc2ccnc3cc(Cl)ccc23)CC1
OC(=O)c1ccccc1Nc1cccc(c1)C(F)(F)F CC(C)n1c(C=CC(O)CC(O)CC(O)=O)c(-c2ccc(F)cc2)c2ccccc12
Cc1onc(c1C(=O)NC1C2SC(C)(C)C(N2C1=O)C(O)=O)-c1ccccc1 CCCCc1oc2ccccc2c1C(=O)c1cc(I)c(OCCN(CC)CC)c(I)c1
COc1ccc(cc1)C1Sc2ccccc2N(CCN(C)C)C(=O)C1OC(C)=O CC(C)Cc1ccc(cc1)C(C)C(=O)NO
Nc1nc(N)c2nc(-c3ccccc3)c(N)nc2n1 O=C(NCc1ccc(F)cc1)c1nc2n(c1O)CCOC2 CCOc1ccccc1OCCNCC(O)COc1ccccc1
CC1(C)SC2C(NC(=O)Cc3ccccc3)C(=O)N2C1C(O)=O""".split()


def canon(smi):
    m = Chem.MolFromSmiles(smi)
    if m is None:
        return None
    return Chem.MolToSmiles(m, isomericSmiles=False)


def run(rxn_smarts, a, b):
    rxn = AllChem.ReactionFromSmarts(rxn_smarts)
    ma, mb = Chem.MolFromSmiles(a), Chem.MolFromSmiles(b)
    prods = rxn.RunReactants((ma, mb))
    outs = set()
    for p in prods:
        pm = p[0]
        try:
            Chem.SanitizeMol(pm)
        except Exception:
            continue
        outs.add(Chem.MolToSmiles(pm, isomericSmiles=False))
    return sorted(outs)


def brics_reference(smi):
    m = Chem.MolFromSmiles(smi)
    bonds = [b for b in BRICS.FindBRICSBonds(m) if b[1] != ("7", "7")]
    if not bonds:
        return smi
    broken = BRICS.BreakBRICSBonds(m, bonds)
    frags = []
    for f in Chem.GetMolFrags(broken, asMols=True):
        Chem.RemoveStereochemistry(f)
        frags.append(Chem.MolToSmiles(f))
    return ".".join(sorted(frags))


def main():
    rng = random.Random(20240611)
    os.makedirs(OUT, exist_ok=True)
    names = sorted(REACTIONS)

    # Single-step reactions with known reactants.
    reactions = []
    seen = set()
    while len(reactions) < 100:
        name = names[len(reactions) % len(names)]
        smarts, pool_a, pool_b = REACTIONS[name]
        a, b = rng.choice(pool_a), rng.choice(pool_b)
        prods = run(smarts, a, b)
        if not prods:
            continue
        p = prods[0]
        if p in seen:
            continue
        seen.add(p)
        reactions.append((".".join([canon(a), canon(b)]), p, name))

    # Corpus: one to three coupling steps on a growing product.
    corpus = set()
    attempts = 0
    while len(corpus) < 1150 and attempts < 200000:
        attempts += 1
        name = rng.choice(names)
        smarts, pool_a, pool_b = REACTIONS[name]
        prods = run(smarts, rng.choice(pool_a), rng.choice(pool_b))
        if not prods:
            continue
        cur = rng.choice(prods)
        for _ in range(rng.randint(0, 2)):
            name = rng.choice(names)
            smarts, pool_a, pool_b = REACTIONS[name]
            if rng.random() < 0.5:
                nxt = run(smarts, cur, rng.choice(pool_b))
            else:
                nxt = run(smarts, rng.choice(pool_a), cur)
            if nxt:
                cur = rng.choice(nxt)
        m = Chem.MolFromSmiles(cur)
        if m is None:
            continue
        mw = Descriptors.MolWt(m)
        if 150 <= mw <= 700:
            corpus.add(Chem.MolToSmiles(m, isomericSmiles=False))
    for d in DRUGS:
        c = canon(d)
        assert c is not None, d
        corpus.add(c)
    corpus = sorted(corpus)

    with open(os.path.join(OUT, "corpus.smi"), "w") as f:
        f.write("\n".join(corpus) + "\n")
    with open(os.path.join(OUT, "reactions.tsv"), "w") as f:
        for r, p, t in reactions:
            f.write(f"{r}\t{p}\t{t}\n")
    with open(os.path.join(OUT, "brics_reference.tsv"), "w") as f:
        for s in corpus:
            f.write(f"{s}\t{brics_reference(s)}\n")
    print(len(corpus), "molecules;", len(reactions), "reactions")


if __name__ == "__main__":
    main()
