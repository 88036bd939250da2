"""
lrlab Golden File Generator
Recomputes the golden JSON files used by the test suite and checks them against their
closed forms before writing
"""

import json
from math import log
from pathlib import Path

import numpy as np

from lrlab import aklt, models
from lrlab.lattice import SiteSet
from lrlab.quantum import embed

# Paths
GOLDEN_DIR = Path("tests/golden")
GOLDEN_DIR.mkdir(parents=True, exist_ok=True)


def aklt_golden():
    """Bond spectrum, transfer spectrum, <S3 S3> at r = 1, 2, 3 and the entropy limit"""
    return {
        "bond_spectrum": (np.linalg.eigvalsh(aklt.aklt_bond().matrix).round(12) + 0.0).tolist(),
        "e1_spectrum": aklt.transfer_map().spectrum().real.tolist(),
        "zz_correlation": [aklt.correlation(3, 3, r) for r in (1, 2, 3)],
        "entropy_limit": log(4.0),
    }


def check_aklt(golden):
    """Closed forms: spectrum {1, -1/3 x3} and <S3_0 S3_r> = (4/3)(-1/3)^r"""
    expected = [(4.0 / 3.0) * (-1.0 / 3.0) ** r for r in (1, 2, 3)]
    assert np.allclose(golden["e1_spectrum"], [1, -1 / 3, -1 / 3, -1 / 3], atol=1e-12)
    assert np.allclose(golden["zz_correlation"], expected, atol=1e-14)
    assert golden["bond_spectrum"] == [0.0] * 4 + [1.0] * 5


def main():
    print("=" * 60)
    print("lrlab Golden File Generator")
    print("=" * 60)

    print("\n1. Embedding sigma^3 on a two-site path...")
    sigma = embed(models.sigma_z(0), SiteSet.path(2))
    payload = json.loads(sigma.to_json())
    path = GOLDEN_DIR / "embed_sigma3.json"
    path.write_text(json.dumps(payload, indent=2) + "\n")
    print(f"   ✓ Saved to {path}")

    print("\n2. AKLT spectra and correlations...")
    golden = aklt_golden()
    try:
        check_aklt(golden)
    except AssertionError:
        print("   ❌ Error: AKLT values disagree with their closed forms; nothing written")
        raise
    path = GOLDEN_DIR / "aklt_spectra.json"
    path.write_text(json.dumps(golden, indent=2) + "\n")
    print(f"   ✓ Saved to {path}")
    for key, value in golden.items():
        print(f"   {key}: {value}")

    print("\n" + "=" * 60)
    print("Golden files regenerated!")
    print("=" * 60)


if __name__ == "__main__":
    main()
