#!/usr/bin/env python3
"""Regenerates the bundled sample entity CSVs under data/.

All values are synthetic; only the column layout and sampling cadence follow
the FLUXNET (daily flux tower) and CARAVAN (daily catchment) conventions.
"""

import datetime as dt
import math
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"


def days(start, n):
    d0 = dt.date.fromisoformat(start)
    return [(d0 + dt.timedelta(days=i)).isoformat() for i in range(n)]


def fluxnet_site(name, start, n, lat_shift, rng):
    rows = []
    for i, t in enumerate(days(start, n)):
        season = math.sin(2 * math.pi * (i - 80 + lat_shift) / 365.25)
        ta = 10 + 12 * season + rng.gauss(0, 2.5)
        sw = max(5.0, 180 + 120 * season + rng.gauss(0, 40))
        vpd = max(0.0, 0.35 * max(ta, 0) + rng.gauss(0, 0.8))
        p = rng.expovariate(0.4) if rng.random() < 0.3 else 0.0
        gpp = max(0.0, 0.03 * sw * (1 / (1 + math.exp(-(ta - 5) / 3))) - 0.25 * vpd + rng.gauss(0, 0.6))
        rows.append(f"{t},{ta:.3f},{sw:.3f},{vpd:.3f},{p:.3f},{gpp:.3f}")
    path = ROOT / "fluxnet_sample" / f"{name}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("TIMESTAMP,TA_F,SW_IN_F,VPD_F,P_F,GPP_NT_VUT_REF\n" + "\n".join(rows) + "\n")


def caravan_basin(name, start, n, wetness, rng):
    rows = []
    store = 20.0
    for i, t in enumerate(days(start, n)):
        season = math.sin(2 * math.pi * (i - 100) / 365.25)
        temp = 9 + 6 * season + rng.gauss(0, 2)
        precip = rng.expovariate(1 / (3.5 * wetness)) if rng.random() < 0.55 else 0.0
        pet = max(0.0, 1.6 + 1.3 * season + rng.gauss(0, 0.3))
        store = max(0.0, store + precip - 0.6 * pet)
        q = 0.08 * store
        store -= q
        rows.append(f"{t},{precip:.3f},{temp:.3f},{pet:.3f},{q:.3f}")
    path = ROOT / "caravan_sample" / f"{name}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        "date,total_precipitation_sum,temperature_2m_mean,potential_evaporation_sum,streamflow\n" + "\n".join(rows) + "\n"
    )


def main():
    rng = random.Random(20240601)
    fluxnet_site("US-Ha1", "2010-01-01", 365, 0, rng)
    fluxnet_site("DE-Tha", "2012-03-01", 200, 15, rng)
    fluxnet_site("AU-Tum", "2008-06-15", 400, 182, rng)
    caravan_basin("camelsgb_27009", "2000-10-01", 1096, 1.0, rng)
    caravan_basin("camelsgb_39001", "2003-10-01", 731, 0.6, rng)


if __name__ == "__main__":
    main()
