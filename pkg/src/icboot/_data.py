"""Embedded breast-retraction dataset.

Interval-censored times (months) to cosmetic deterioration (breast
retraction) in early breast cancer patients treated at the Joint Center for
Radiation Therapy, Boston, 1976-1980: 46 patients under radiotherapy alone
and 48 under radiotherapy plus adjuvant chemotherapy.  Each row is a
half-open interval (l, r] known to contain the retraction time; r = inf
means no retraction by the last clinic visit.

Source: Finkelstein & Wolfe (1985), "A semiparametric model for regression
analysis of interval-censored failure time data", Biometrics 41, Table 4
(the transcription distributed as `bcos` with R's `interval` package).

`DATASET_VERSION` is bumped on any transcription correction and
`DATASET_SHA256` pins the canonical serialization byte-for-byte.
"""

from __future__ import annotations

import hashlib
import math

from .estimators import CensoringInterval

DATASET_VERSION = "1"

# fmt: off
_RADIOTHERAPY = (
    (45, math.inf), (6, 10), (0, 7), (46, math.inf), (46, math.inf),
    (7, 16), (17, math.inf), (7, 14), (37, 44), (0, 8),
    (4, 11), (15, math.inf), (11, 15), (22, math.inf), (46, math.inf),
    (46, math.inf), (25, 37), (46, math.inf), (26, 40), (46, math.inf),
    (27, 34), (36, 44), (46, math.inf), (36, 48), (37, math.inf),
    (40, math.inf), (17, 25), (46, math.inf), (11, 18), (38, math.inf),
    (5, 12), (37, math.inf), (0, 5), (18, math.inf), (24, math.inf),
    (36, math.inf), (5, 11), (19, 35), (17, 25), (24, math.inf),
    (32, math.inf), (33, math.inf), (19, 26), (37, math.inf), (34, math.inf),
    (36, math.inf),
)

_RADIO_CHEMO = (
    (8, 12), (0, 22), (24, 31), (17, 27), (17, 23),
    (24, 30), (16, 24), (13, math.inf), (11, 13), (16, 20),
    (18, 25), (17, 26), (32, math.inf), (23, math.inf), (44, 48),
    (10, 35), (0, 5), (5, 8), (12, 20), (11, math.inf),
    (33, 40), (31, math.inf), (13, 39), (19, 32), (34, math.inf),
    (13, math.inf), (16, 24), (35, math.inf), (15, 22), (11, 17),
    (22, 32), (48, math.inf), (30, 34), (13, math.inf), (10, 17),
    (8, 21), (4, 9), (11, math.inf), (14, 19), (4, 8),
    (34, math.inf), (30, 36), (18, 24), (16, 60), (35, 39),
    (21, math.inf), (11, 20), (48, math.inf),
)
# fmt: on


def _canonical_bytes() -> bytes:
    lines = ["group,left,right"]
    for name, rows in (("radiotherapy", _RADIOTHERAPY), ("radio_chemo", _RADIO_CHEMO)):
        for l, r in rows:
            lines.append(f"{name},{l:g},{'inf' if math.isinf(r) else format(r, 'g')}")
    return ("\n".join(lines) + "\n").encode("utf-8")


DATASET_SHA256 = "44ae5a6131fe406e5bc50ce1553ee68e43d7380c6ede1d537d1679d3f4fb59ba"


def load_breast_cancer() -> tuple[list[CensoringInterval], list[CensoringInterval]]:
    """The two treatment groups as censoring intervals.

    Returns ``(radiotherapy, radio_chemo)`` with 46 and 48 subjects; raises
    ``RuntimeError`` if the embedded rows no longer match their checksum.
    """
    digest = hashlib.sha256(_canonical_bytes()).hexdigest()
    if digest != DATASET_SHA256:
        raise RuntimeError(
            f"embedded dataset checksum mismatch: {digest} != {DATASET_SHA256}"
        )
    rad = [CensoringInterval(float(l), float(r)) for l, r in _RADIOTHERAPY]
    chemo = [CensoringInterval(float(l), float(r)) for l, r in _RADIO_CHEMO]
    return rad, chemo
